"""Entropias cruzadas usadas pelo estudante."""

from typing import Tuple

import numpy as np

from ..data.mixing import smooth_one_hot
from ..exceptions import ParameterError, ShapeError
from ..tensor import Tensor, ops


def _target_ce(logits: Tensor, targets: np.ndarray) -> Tensor:
    """-sum(t * log_softmax(z)) por linha, média no lote."""
    if targets.shape != logits.shape:
        raise ShapeError("cross_entropy", f"alvos {targets.shape} vs logits {logits.shape}")
    log_probs = ops.log_softmax(logits, axis=-1)
    per_sample = ops.sum(ops.mul(log_probs, targets.astype(logits.dtype)), axis=-1)
    return ops.neg(ops.mean(per_sample))


def ce_soft(logits: Tensor, soft_targets) -> Tensor:
    targets = np.asarray(soft_targets)
    if (targets < 0).any():
        raise ParameterError("soft_targets", "alvos com entradas negativas")
    return _target_ce(logits, targets)


def ce_smoothed(logits: Tensor, labels, epsilon: float) -> Tensor:
    """CE com 1 - eps no rótulo e eps/(C-1) nas demais classes."""
    return _target_ce(logits, smooth_one_hot(labels, logits.shape[-1], epsilon))


def drw_distill_loss(logits_dist: Tensor, teacher_labels, weights) -> Tensor:
    """-w[y_t] * log softmax(z)[y_t], média simples no lote."""
    labels = np.asarray(teacher_labels, dtype=np.int64)
    weights = np.asarray(weights, dtype=np.float64)
    targets = smooth_one_hot(labels, logits_dist.shape[-1]).astype(np.float64)
    return _target_ce(logits_dist, targets * weights[labels][:, None])


def deit_lt_loss_terms(logits_cls: Tensor, logits_dist: Tensor, soft_targets,
                       teacher_labels, weights) -> Tuple[Tensor, Tensor]:
    """Termo CLS (CE suave na verdade) e termo DIST (CE re-ponderada no rótulo do professor)."""
    if logits_cls.shape[0] != logits_dist.shape[0] or logits_cls.shape[0] != len(teacher_labels):
        raise ShapeError("combined_deit_lt_loss", "tamanhos de lote divergentes")
    return ce_soft(logits_cls, soft_targets), drw_distill_loss(logits_dist, teacher_labels, weights)


def combined_deit_lt_loss(logits_cls: Tensor, logits_dist: Tensor, soft_targets,
                          teacher_labels, weights) -> Tensor:
    """L = 1/2 CE(f^c, y) + 1/2 DRW(f^d, y_t)."""
    cls_term, dist_term = deit_lt_loss_terms(logits_cls, logits_dist, soft_targets, teacher_labels, weights)
    return ops.add(ops.mul(cls_term, 0.5), ops.mul(dist_term, 0.5))
