"""Rank de features: menor k que reconstrói as features de cauda."""

import numpy as np

from ..exceptions import NumericError, ShapeError
from ..models.diagnostics import FeatureMatrix, FeatureRankResult
from ..tensor import svd

DEFAULT_TOL = 0.01


def reconstruction_error(f_min: np.ndarray, basis: np.ndarray) -> float:
    """||F - F V V^T||^2 / ||F||^2 para uma base ortonormal V [d, k]."""
    recon = (f_min @ basis) @ basis.T
    return float(np.sum((f_min - recon) ** 2) / np.sum(f_min ** 2))


def feature_rank(f_all: FeatureMatrix, f_min: FeatureMatrix, tol: float = DEFAULT_TOL) -> FeatureRankResult:
    """
    Centraliza F_all, decompõe por SVD e procura o menor k em 1..min(n, d)
    cujo subespaço dos k primeiros vetores singulares à direita reconstrói
    F_min com erro relativo <= tol. F_min nulo devolve k = 0; sem k válido
    devolve min(n, d) com `exhausted`.
    """
    if f_all.width != f_min.width:
        raise ShapeError("feature_rank", f"larguras {f_all.width} e {f_min.width}")
    all_rows = f_all.rows.astype(np.float64)
    min_rows = f_min.rows.astype(np.float64)
    if not np.isfinite(min_rows).all():
        raise NumericError("feature_rank", "F_min contém valores não finitos")

    counts = {"block": f_min.block, "n_all": len(all_rows), "n_min": len(min_rows)}
    if np.sum(min_rows ** 2) == 0.0:
        return FeatureRankResult(f_min.token_kind, 0, tol, **counts)

    centered = all_rows - all_rows.mean(axis=0, keepdims=True)
    _, _, v = svd(centered)
    basis = v.numpy()
    r = basis.shape[1]
    for k in range(1, r + 1):
        if reconstruction_error(min_rows, basis[:, :k]) <= tol:
            return FeatureRankResult(f_min.token_kind, k, tol, **counts)
    return FeatureRankResult(f_min.token_kind, r, tol, exhausted=True, **counts)
