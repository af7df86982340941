"""Kernel de álgebra linear usado pelos diagnósticos."""

from typing import Tuple, Union

import numpy as np

from ..exceptions import NumericError, ShapeError
from .tensor import Tensor


def svd(m: Union[Tensor, np.ndarray]) -> Tuple[Tensor, Tensor, Tensor]:
    """
    Decomposição em valores singulares reduzida em precisão dupla.

    Returns:
        (U [n, r], S [r], V [d, r]) com r = min(n, d), S não crescente e
        U·diag(S)·Vᵀ reconstruindo `m`.
    """
    data = np.asarray(m.data if isinstance(m, Tensor) else m, dtype=np.float64)
    if data.ndim != 2:
        raise ShapeError("svd", f"esperada matriz 2-D, recebido shape {data.shape}")
    if not np.isfinite(data).all():
        raise NumericError("svd", "matriz contém valores não finitos")
    try:
        u, s, vt = np.linalg.svd(data, full_matrices=False)
    except np.linalg.LinAlgError as e:
        raise NumericError("svd", "decomposição não convergiu", e)
    return Tensor(u), Tensor(s), Tensor(vt.T)
