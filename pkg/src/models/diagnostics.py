"""Modelos para os diagnósticos de atenção, rank e entropia."""

from dataclasses import dataclass
from enum import Enum
from typing import List, Optional, Union

import numpy as np


class TokenKind(Enum):
    """Token de onde saem as features."""
    CLS = "cls"
    DIST = "dist"


@dataclass
class AttentionRecord:
    """Matrizes de atenção pós-softmax, uma por bloco, com shape [B, heads, T, T]."""
    blocks: List[np.ndarray]
    num_prefix_tokens: int

    @property
    def num_blocks(self) -> int:
        return len(self.blocks)

    @property
    def num_heads(self) -> int:
        return self.blocks[0].shape[1] if self.blocks else 0

    @property
    def num_tokens(self) -> int:
        return self.blocks[0].shape[-1] if self.blocks else 0


@dataclass
class FeatureMatrix:
    """Features por imagem de um token."""
    rows: np.ndarray
    source_classes: np.ndarray
    token_kind: TokenKind
    block: Optional[int] = None

    @property
    def width(self) -> int:
        return self.rows.shape[1]

    def select_classes(self, classes) -> "FeatureMatrix":
        mask = np.isin(self.source_classes, list(classes))
        return FeatureMatrix(self.rows[mask], self.source_classes[mask], self.token_kind, self.block)


@dataclass
class LocalityProfile:
    """Distância média de atenção, em pixels, por bloco e cabeça."""
    distances: np.ndarray  # [blocks, heads]
    patch_size: int
    image_size: int
    n_images: int


@dataclass
class RolloutResult:
    """Rollout acumulado e mapa de saliência sobre os patches."""
    matrix: np.ndarray  # [B, T, T]
    saliency: np.ndarray  # [B, grid, grid]
    target: Union[int, str]


@dataclass
class FeatureRankResult:
    """Menor k que reconstrói as features de cauda dentro da tolerância."""
    token_kind: TokenKind
    k: int
    tol: float
    exhausted: bool = False
    block: Optional[int] = None
    n_all: int = 0
    n_min: int = 0


@dataclass
class EntropySummary:
    """Entropia (nats) das saídas do professor em imagens fracas vs OOD."""
    in_mean: float
    in_std: float
    ood_mean: float
    ood_std: float
    n_samples: int


@dataclass
class DivergenceResult:
    """Distância de cosseno média entre features CLS e DIST."""
    mean_distance: float
    excluded: int
    n_rows: int
