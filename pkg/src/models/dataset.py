"""Modelos para conjuntos de dados long-tailed e lotes aumentados."""

from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional, Tuple

import numpy as np


class ClassGroup(Enum):
    """Grupos de classes por volume de amostras."""
    HEAD = "Head"
    MID = "Mid"
    TAIL = "Tail"


@dataclass
class RawDataset:
    """CIFAR completo como lido dos arquivos binários."""
    train_images: np.ndarray  # [N, 32, 32, 3] uint8
    train_labels: np.ndarray  # [N] int64
    test_images: np.ndarray
    test_labels: np.ndarray
    num_classes: int = 10
    source: str = ""


@dataclass
class LTDataset:
    """Split de treino long-tailed com validação balanceada intocada."""
    images: np.ndarray
    labels: np.ndarray
    class_counts: np.ndarray
    rho: float
    n_max: int
    seed: int
    groups: Dict[int, ClassGroup]
    val_images: np.ndarray
    val_labels: np.ndarray
    dataset_kind: str = "cifar10"
    mean: np.ndarray = field(default_factory=lambda: np.zeros(3, dtype=np.float32))
    std: np.ndarray = field(default_factory=lambda: np.ones(3, dtype=np.float32))

    @property
    def num_classes(self) -> int:
        return len(self.class_counts)

    @property
    def size(self) -> int:
        return len(self.labels)

    @property
    def imbalance_ratio(self) -> float:
        """max_i N_i / min_j N_j efetivo após o arredondamento."""
        return float(self.class_counts.max() / max(self.class_counts.min(), 1))

    def classes_in(self, group: ClassGroup) -> List[int]:
        return sorted(c for c, g in self.groups.items() if g == group)

    def manifest_rows(self) -> List[Tuple[int, int, str]]:
        return [(c, int(n), self.groups[c].value) for c, n in enumerate(self.class_counts)]

    def descriptor(self) -> Dict[str, Any]:
        """Resumo serializável do split (vai para cabeçalhos de checkpoint)."""
        return {
            "dataset_kind": self.dataset_kind,
            "rho": self.rho,
            "n_max": self.n_max,
            "seed": self.seed,
            "class_counts": [int(n) for n in self.class_counts],
            "groups": {str(c): g.value for c, g in self.groups.items()},
            "mean": [float(v) for v in self.mean],
            "std": [float(v) for v in self.std],
        }


@dataclass
class RawBatch:
    """Lote de imagens uint8 antes de qualquer aumento."""
    images: np.ndarray
    labels: np.ndarray
    seed: Tuple[int, ...]
    index: int = 0

    @property
    def size(self) -> int:
        return len(self.labels)


@dataclass
class LabeledBatch:
    """Entradas normalizadas [B, 3, H, W] com rótulos inteiros."""
    inputs: np.ndarray
    labels: np.ndarray


@dataclass
class AugmentedBatch:
    """Lote pronto para o estudante, com alvos suaves misturados."""
    inputs: np.ndarray
    soft_targets: np.ndarray
    raw_labels_a: np.ndarray
    raw_labels_b: np.ndarray
    lam: float
    mode: str = "none"

    @property
    def size(self) -> int:
        return len(self.raw_labels_a)


@dataclass
class AugmentedViews:
    """Vistas de um lote cru consumidas por um passo de destilação."""
    student: AugmentedBatch
    teacher_inputs: Optional[np.ndarray] = None
