"""Regras de decisão sobre logits."""

import numpy as np

from ..models.training_results import Predictions
from ..tensor import Tensor


def _as_array(logits) -> np.ndarray:
    return logits.data if isinstance(logits, Tensor) else np.asarray(logits)


def hard_label(logits) -> np.ndarray:
    """argmax por linha; empates vão para o menor índice."""
    return np.argmax(_as_array(logits), axis=-1).astype(np.int64)


def predict(logits_cls, logits_dist) -> Predictions:
    """Predições da média das duas cabeças e de cada cabeça isolada."""
    cls = _as_array(logits_cls).astype(np.float64)
    dist = _as_array(logits_dist).astype(np.float64)
    return Predictions(
        averaged=hard_label((cls + dist) / 2.0),
        cls_only=hard_label(cls),
        dist_only=hard_label(dist),
    )
