"""Validadores de parâmetros numéricos e de entrada da CLI."""

from typing import Optional, Tuple, Union

import numpy as np

from ..exceptions import ParameterError

ROLLOUT_TOKENS = ("cls", "dist", "mean")


def require_open_unit(name: str, value: float):
    """Exige valor em (0, 1)."""
    if not 0.0 < value < 1.0:
        raise ParameterError(name, f"{value} fora de (0, 1)")


def require_probability(name: str, value: float):
    if not 0.0 <= value <= 1.0:
        raise ParameterError(name, f"{value} fora de [0, 1]")


def require_at_least(name: str, value: float, minimum: float):
    if value < minimum:
        raise ParameterError(name, f"{value} deve ser >= {minimum}")


def require_nonnegative(name: str, values) -> np.ndarray:
    """Exige entradas não negativas; devolve o array."""
    array = np.asarray(values)
    if (array < 0).any():
        raise ParameterError(name, "contém valores negativos")
    return array


def require_positive_counts(name: str, counts) -> np.ndarray:
    array = np.asarray(counts)
    if array.size == 0 or (array <= 0).any():
        raise ParameterError(name, "contagens de classe devem ser positivas")
    return array


def require_labels(name: str, labels, num_classes: int) -> np.ndarray:
    """Rótulos inteiros em [0, num_classes); devolve int64."""
    array = np.asarray(labels, dtype=np.int64)
    if array.size and (array.min() < 0 or array.max() >= num_classes):
        raise ParameterError(name, f"rótulo fora de [0, {num_classes})")
    return array


def validate_rollout_target(target: str) -> Tuple[bool, Optional[Union[str, int]], str]:
    """Aceita 'cls', 'dist', 'mean' ou um índice de token não negativo."""
    lowered = target.strip().lower()
    if lowered in ROLLOUT_TOKENS:
        return True, lowered, ""
    if lowered.isdigit():
        return True, int(lowered), ""
    return False, None, f"alvo deve ser um de {ROLLOUT_TOKENS} ou um índice de token"


def format_duration(seconds: float) -> str:
    """Formata duração em formato legível."""
    if seconds < 1:
        return f"{seconds*1000:.0f}ms"
    elif seconds < 60:
        return f"{seconds:.1f}s"
    elif seconds < 3600:
        minutes = int(seconds // 60)
        secs = int(seconds % 60)
        return f"{minutes}m {secs}s"
    else:
        hours = int(seconds // 3600)
        minutes = int((seconds % 3600) // 60)
        return f"{hours}h {minutes}m"
