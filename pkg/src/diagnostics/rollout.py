"""Attention rollout: produto das atenções médias com resíduo."""

from typing import Union

import numpy as np

from ..exceptions import ParameterError, ShapeError
from ..models.diagnostics import AttentionRecord, RolloutResult


def _target_rows(rollout: np.ndarray, target: Union[str, int], prefix: int) -> np.ndarray:
    if isinstance(target, (int, np.integer)):
        if 0 <= target < rollout.shape[-1]:
            return rollout[:, int(target)]
        raise ParameterError("target_token", f"índice {target} fora de [0, {rollout.shape[-1]})")
    if target == "cls":
        return rollout[:, 0]
    if target == "dist":
        if prefix < 2:
            raise ParameterError("target_token", "modelo sem token DIST")
        return rollout[:, 1]
    if target == "mean":
        return rollout[:, :max(prefix, 1)].mean(axis=1)
    raise ParameterError("target_token", f"alvo inválido: {target!r}")


def rollout_matrix(attention: AttentionRecord) -> np.ndarray:
    """R = A~_L ... A~_1 com A~ = (media_cabecas(A) + I) / 2, linhas renormalizadas."""
    if not attention.blocks:
        raise ShapeError("attention_rollout", "nenhum bloco de atenção capturado")
    batch, _, tokens, _ = attention.blocks[0].shape
    identity = np.eye(tokens)
    result = np.broadcast_to(identity, (batch, tokens, tokens)).copy()
    for block in attention.blocks:
        mean = block.astype(np.float64).mean(axis=1)
        augmented = 0.5 * (mean + identity)
        augmented /= augmented.sum(axis=-1, keepdims=True)
        result = augmented @ result
    return result


def attention_rollout(attention: AttentionRecord, target_token: Union[str, int] = "cls") -> RolloutResult:
    """Saliência do token alvo sobre os patches, na forma da grade."""
    rollout = rollout_matrix(attention)
    prefix = attention.num_prefix_tokens
    n_patches = rollout.shape[-1] - prefix
    grid = int(round(np.sqrt(n_patches)))
    if grid * grid != n_patches:
        raise ShapeError("attention_rollout", f"{n_patches} patches não formam uma grade quadrada")
    row = _target_rows(rollout, target_token, prefix)
    saliency = row[:, prefix:].reshape(-1, grid, grid)
    return RolloutResult(matrix=rollout, saliency=saliency, target=target_token)
