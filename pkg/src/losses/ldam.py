"""Perda LDAM (margens dependentes da contagem de cada classe)."""

from typing import Optional

import numpy as np

from ..exceptions import ShapeError
from ..tensor import Tensor, ops
from ..utils.validators import require_labels, require_positive_counts
from .classification import _target_ce


def ldam_margins(class_counts, max_margin: float = 0.5) -> np.ndarray:
    """Delta_j proporcional a N_j^(-1/4), escalado para que max(Delta) = max_margin."""
    counts = require_positive_counts("class_counts", class_counts).astype(np.float64)
    margins = 1.0 / np.power(counts, 0.25)
    return margins * (max_margin / margins.max())


def ldam_loss(logits: Tensor, labels, class_counts, max_margin: float = 0.5,
              scale: float = 30.0, weights: Optional[np.ndarray] = None) -> Tensor:
    """
    CE sobre s * (z - Delta_y no rótulo verdadeiro).

    `logits` são os cossenos z do classificador normalizado. `weights`
    (DRW) multiplica a perda de cada amostra por w[y]; a redução é a média.
    """
    labels = require_labels("labels", labels, logits.shape[-1])
    if labels.shape != (logits.shape[0],):
        raise ShapeError("ldam_loss", f"rótulos {labels.shape} para logits {logits.shape}")
    margins = ldam_margins(class_counts, max_margin)
    if len(margins) != logits.shape[-1]:
        raise ShapeError("ldam_loss", f"{len(margins)} contagens para {logits.shape[-1]} classes")
    shift = np.zeros(logits.shape, dtype=logits.dtype)
    shift[np.arange(len(labels)), labels] = margins[labels]
    adjusted = ops.mul(ops.sub(logits, shift), scale)

    targets = np.zeros(logits.shape, dtype=np.float64)
    per_sample = np.ones(len(labels)) if weights is None else np.asarray(weights, dtype=np.float64)[labels]
    targets[np.arange(len(labels)), labels] = per_sample
    return _target_ce(adjusted, targets)
