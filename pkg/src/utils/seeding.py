"""Derivação determinística de sementes a partir da semente mestra."""

from dataclasses import asdict, dataclass
from typing import Dict

import numpy as np


@dataclass(frozen=True)
class SeedBundle:
    """Sub-sementes usadas por cada fonte de aleatoriedade de uma execução."""
    master: int
    split: int
    init: int
    augment: int
    order: int

    def to_dict(self) -> Dict[str, int]:
        return asdict(self)


def derive_seeds(master: int) -> SeedBundle:
    children = np.random.SeedSequence(master).generate_state(4, dtype=np.uint32)
    split, init, augment, order = (int(s) for s in children)
    return SeedBundle(master=int(master), split=split, init=init, augment=augment, order=order)


def epoch_rng(seed: int, epoch: int) -> np.random.Generator:
    """Gerador da ordem de amostragem de uma época."""
    return np.random.default_rng([seed, epoch])


def batch_rng(seed: int, epoch: int, batch_index: int) -> np.random.Generator:
    """Gerador de aumento de um lote; não depende do número de workers."""
    return np.random.default_rng([seed, epoch, batch_index])
