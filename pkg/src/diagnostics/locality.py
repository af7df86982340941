"""Distância média de atenção entre centros de patches."""

import numpy as np

from ..exceptions import ShapeError
from ..models.diagnostics import AttentionRecord, LocalityProfile

MAX_PREFIX_TOKENS = 2


def patch_centers(grid: int, patch_size: int) -> np.ndarray:
    """Centros (y, x) em pixels, em ordem de linha."""
    coords = (np.arange(grid) + 0.5) * patch_size
    yy, xx = np.meshgrid(coords, coords, indexing="ij")
    return np.stack([yy.ravel(), xx.ravel()], axis=1)


def pixel_distances(grid: int, patch_size: int) -> np.ndarray:
    centers = patch_centers(grid, patch_size)
    diff = centers[:, None, :] - centers[None, :, :]
    return np.sqrt((diff ** 2).sum(axis=-1))


def prefix_tokens(num_tokens: int, grid: int) -> int:
    prefix = num_tokens - grid * grid
    if not 0 <= prefix <= MAX_PREFIX_TOKENS:
        raise ShapeError("mean_attention_distance", f"{num_tokens} tokens incompatível com grade {grid}x{grid}")
    return prefix


def mean_attention_distance(attention: AttentionRecord, patch_size: int, image_size: int) -> LocalityProfile:
    """
    Para cada bloco e cabeça: sum_q sum_k A[q, k] * dist(q, k) / n_queries,
    com CLS/DIST fora das consultas e das chaves (sem renormalizar as
    linhas), média sobre as imagens.
    """
    if image_size % patch_size:
        raise ShapeError("mean_attention_distance", f"{image_size} não divisível por {patch_size}")
    grid = image_size // patch_size
    distances = pixel_distances(grid, patch_size)
    rows = []
    n_images = 0
    for block in attention.blocks:
        if block.ndim != 4 or block.shape[-1] != block.shape[-2]:
            raise ShapeError("mean_attention_distance", f"bloco com shape {block.shape}")
        prefix = prefix_tokens(block.shape[-1], grid)
        patches = block[:, :, prefix:, prefix:].astype(np.float64)
        per_image = (patches * distances).sum(axis=-1).mean(axis=-1)  # [B, heads]
        rows.append(per_image.mean(axis=0))
        n_images = block.shape[0]
    return LocalityProfile(
        distances=np.array(rows) if rows else np.zeros((0, 0)),
        patch_size=patch_size,
        image_size=image_size,
        n_images=n_images,
    )
