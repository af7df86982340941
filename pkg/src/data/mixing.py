"""Mixup, CutMix e alvos suavizados."""

import math
from typing import Optional, Tuple

import numpy as np

from ..exceptions import ParameterError, ShapeError
from ..models.dataset import AugmentedBatch, LabeledBatch
from ..utils.validators import require_labels, require_probability


def smooth_one_hot(labels: np.ndarray, num_classes: int, smoothing: float = 0.0) -> np.ndarray:
    """1 - eps no rótulo, eps/(C-1) nas demais classes."""
    if not 0.0 <= smoothing < 1.0:
        raise ParameterError("smoothing", f"{smoothing} fora de [0, 1)")
    labels = require_labels("labels", labels, num_classes)
    off = smoothing / (num_classes - 1) if num_classes > 1 else 0.0
    targets = np.full((len(labels), num_classes), off, dtype=np.float64)
    targets[np.arange(len(labels)), labels] = 1.0 - smoothing if num_classes > 1 else 1.0
    return targets.astype(np.float32)


def _check_pair(batch_a: LabeledBatch, batch_b: LabeledBatch):
    if batch_a.inputs.shape != batch_b.inputs.shape:
        raise ShapeError("mix", f"lotes {batch_a.inputs.shape} e {batch_b.inputs.shape}")


def _sample_lambda(alpha: float, rng: np.random.Generator, lam: Optional[float]) -> float:
    if lam is not None:
        require_probability("lam", lam)
        return float(lam)
    if alpha <= 0:
        raise ParameterError("alpha", f"{alpha} deve ser positivo")
    return float(rng.beta(alpha, alpha))


def _blend_targets(batch_a, batch_b, lam, num_classes, smoothing) -> np.ndarray:
    t_a = smooth_one_hot(batch_a.labels, num_classes, smoothing)
    t_b = smooth_one_hot(batch_b.labels, num_classes, smoothing)
    return (lam * t_a + (1.0 - lam) * t_b).astype(np.float32)


def mixup(batch_a: LabeledBatch, batch_b: LabeledBatch, alpha: float, rng: np.random.Generator,
          num_classes: int, smoothing: float = 0.0, lam: Optional[float] = None) -> AugmentedBatch:
    """lam ~ Beta(alpha, alpha); entradas e alvos misturados linearmente."""
    _check_pair(batch_a, batch_b)
    lam = _sample_lambda(alpha, rng, lam)
    inputs = lam * batch_a.inputs + (1.0 - lam) * batch_b.inputs
    return AugmentedBatch(
        inputs=inputs.astype(batch_a.inputs.dtype),
        soft_targets=_blend_targets(batch_a, batch_b, lam, num_classes, smoothing),
        raw_labels_a=batch_a.labels,
        raw_labels_b=batch_b.labels,
        lam=lam,
        mode="mixup",
    )


def cutmix_box(height: int, width: int, lam: float, center: Tuple[int, int]) -> Tuple[int, int, int, int]:
    """Caixa (y1, y2, x1, x2) de lados H*sqrt(1-lam), W*sqrt(1-lam) recortada na imagem."""
    cut = math.sqrt(1.0 - lam)
    cut_h, cut_w = int(height * cut), int(width * cut)
    cy, cx = center
    y1 = int(np.clip(cy - cut_h // 2, 0, height))
    y2 = int(np.clip(cy - cut_h // 2 + cut_h, 0, height))
    x1 = int(np.clip(cx - cut_w // 2, 0, width))
    x2 = int(np.clip(cx - cut_w // 2 + cut_w, 0, width))
    return y1, y2, x1, x2


def cutmix(batch_a: LabeledBatch, batch_b: LabeledBatch, alpha: float, rng: np.random.Generator,
           num_classes: int, smoothing: float = 0.0, lam: Optional[float] = None,
           center: Optional[Tuple[int, int]] = None) -> AugmentedBatch:
    """Cola um retângulo de `batch_b` em `batch_a`; lam é recalculado pela área colada."""
    _check_pair(batch_a, batch_b)
    lam = _sample_lambda(alpha, rng, lam)
    height, width = batch_a.inputs.shape[-2:]
    if center is None:
        center = (int(rng.integers(0, height)), int(rng.integers(0, width)))
    y1, y2, x1, x2 = cutmix_box(height, width, lam, center)

    inputs = batch_a.inputs.copy()
    inputs[..., y1:y2, x1:x2] = batch_b.inputs[..., y1:y2, x1:x2]
    lam = 1.0 - (y2 - y1) * (x2 - x1) / float(height * width)
    return AugmentedBatch(
        inputs=inputs,
        soft_targets=_blend_targets(batch_a, batch_b, lam, num_classes, smoothing),
        raw_labels_a=batch_a.labels,
        raw_labels_b=batch_b.labels,
        lam=lam,
        mode="cutmix",
    )


def mix_batch(batch: LabeledBatch, rng: np.random.Generator, num_classes: int,
              mixup_alpha: float, cutmix_alpha: float, switch_prob: float = 0.5,
              smoothing: float = 0.0, enabled: bool = True) -> AugmentedBatch:
    """
    Política de mistura por lote: o parceiro é uma permutação do próprio lote.

    Com as duas técnicas ativas, CutMix é escolhido com probabilidade
    `switch_prob`. Sem mistura, os alvos são apenas suavizados.
    """
    use_mixup = enabled and mixup_alpha > 0
    use_cutmix = enabled and cutmix_alpha > 0
    if not (use_mixup or use_cutmix):
        return AugmentedBatch(
            inputs=batch.inputs,
            soft_targets=smooth_one_hot(batch.labels, num_classes, smoothing),
            raw_labels_a=batch.labels,
            raw_labels_b=batch.labels,
            lam=1.0,
            mode="none",
        )

    order = rng.permutation(len(batch.labels))
    partner = LabeledBatch(inputs=batch.inputs[order], labels=batch.labels[order])
    if use_mixup and use_cutmix:
        use_mixup = rng.random() >= switch_prob
    if use_mixup:
        return mixup(batch, partner, mixup_alpha, rng, num_classes, smoothing)
    return cutmix(batch, partner, cutmix_alpha, rng, num_classes, smoothing)
