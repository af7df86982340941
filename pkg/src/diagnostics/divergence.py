"""Divergência entre as representações CLS e DIST."""

import numpy as np

from ..exceptions import ShapeError
from ..models.diagnostics import DivergenceResult
from ..tensor import Tensor


def cls_dist_divergence(features_cls, features_dist) -> DivergenceResult:
    """Média de 1 - cos(u, v); linhas de norma zero ficam fora e são contadas."""
    u = (features_cls.data if isinstance(features_cls, Tensor) else np.asarray(features_cls)).astype(np.float64)
    v = (features_dist.data if isinstance(features_dist, Tensor) else np.asarray(features_dist)).astype(np.float64)
    if u.shape != v.shape or u.ndim != 2:
        raise ShapeError("cls_dist_divergence", f"shapes {u.shape} e {v.shape}")
    norm_u = np.linalg.norm(u, axis=1)
    norm_v = np.linalg.norm(v, axis=1)
    valid = (norm_u > 0) & (norm_v > 0)
    excluded = int((~valid).sum())
    if not valid.any():
        return DivergenceResult(float("nan"), excluded, len(u))
    cosine = (u[valid] * v[valid]).sum(axis=1) / (norm_u[valid] * norm_v[valid])
    return DivergenceResult(float(np.mean(1.0 - cosine)), excluded, len(u))
