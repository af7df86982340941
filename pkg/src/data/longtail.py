"""Construção de splits long-tailed e agrupamento Head/Mid/Tail."""

import logging
from typing import Dict, Optional, Tuple

import numpy as np

from ..exceptions import ParameterError
from ..models.dataset import ClassGroup, LTDataset, RawDataset
from ..utils.validators import require_at_least

logger = logging.getLogger("deit_lt.data")

# Fronteiras fixas por índice de classe (classes em ordem de decaimento)
FIXED_GROUPS = {
    "cifar10": (10, 3, 7),
    "cifar100": (100, 36, 71),
}


def longtail_counts(num_classes: int, n_max: int, rho: float) -> np.ndarray:
    """N_i = floor(n_max * rho^(-i/(C-1))) para i = 0..C-1."""
    require_at_least("rho", rho, 1.0)
    if num_classes == 1:
        return np.array([n_max], dtype=np.int64)
    factor = 1.0 / rho
    counts = [int(n_max * factor ** (i / (num_classes - 1.0))) for i in range(num_classes)]
    return np.array(counts, dtype=np.int64)


def group_classes(class_counts, dataset_kind: str,
                  thresholds: Optional[Tuple[int, int]] = None) -> Dict[int, ClassGroup]:
    """
    Agrupa classes em Head/Mid/Tail.

    Para cifar10/cifar100 os grupos são fronteiras de índice; para qualquer
    outro tipo usa `thresholds=(head, tail)`: contagem > head é Head,
    contagem < tail é Tail e o restante é Mid.
    """
    counts = np.asarray(class_counts)
    if dataset_kind in FIXED_GROUPS:
        expected, mid_start, tail_start = FIXED_GROUPS[dataset_kind]
        if len(counts) != expected:
            raise ParameterError("dataset_kind", f"{dataset_kind} exige {expected} classes, recebido {len(counts)}")
        groups = {}
        for c in range(expected):
            if c < mid_start:
                groups[c] = ClassGroup.HEAD
            elif c < tail_start:
                groups[c] = ClassGroup.MID
            else:
                groups[c] = ClassGroup.TAIL
        return groups

    if thresholds is None:
        raise ParameterError("dataset_kind", f"tipo '{dataset_kind}' desconhecido e sem limiares")
    head_threshold, tail_threshold = thresholds
    groups = {}
    for c, n in enumerate(counts):
        if n > head_threshold:
            groups[c] = ClassGroup.HEAD
        elif n < tail_threshold:
            groups[c] = ClassGroup.TAIL
        else:
            groups[c] = ClassGroup.MID
    return groups


def normalization_stats(images: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Média e desvio por canal (escala [0, 1]) de imagens [N, H, W, 3] uint8."""
    pixels = images.reshape(-1, images.shape[-1]).astype(np.float64) / 255.0
    mean = pixels.mean(axis=0)
    std = pixels.std(axis=0)
    std = np.where(std > 0, std, 1.0)
    return mean.astype(np.float32), std.astype(np.float32)


def to_input(images: np.ndarray, mean: np.ndarray, std: np.ndarray) -> np.ndarray:
    """Converte [B, H, W, 3] uint8 em [B, 3, H, W] float32 normalizado."""
    x = images.astype(np.float32) / 255.0
    x = (x - mean.astype(np.float32)) / std.astype(np.float32)
    return np.ascontiguousarray(x.transpose(0, 3, 1, 2))


def make_longtailed(dataset: RawDataset, rho: float, n_max: int, seed: int,
                    dataset_kind: str = "cifar10",
                    thresholds: Optional[Tuple[int, int]] = None) -> LTDataset:
    """
    Decima o treino segundo o fator de desbalanceamento.

    Cada classe é embaralhada com `seed` e mantém as primeiras N_i imagens.
    O split de teste segue intacto como validação balanceada.
    """
    num_classes = dataset.num_classes
    counts = longtail_counts(num_classes, n_max, rho)

    rng = np.random.default_rng(seed)
    selected = []
    for c in range(num_classes):
        pool = np.flatnonzero(dataset.train_labels == c)
        if len(pool) < n_max:
            raise ParameterError("n_max", f"{n_max} excede as {len(pool)} imagens disponíveis da classe {c}")
        order = rng.permutation(pool)
        selected.append(order[:counts[c]])
    indices = np.concatenate(selected) if selected else np.array([], dtype=np.int64)

    images = dataset.train_images[indices]
    labels = dataset.train_labels[indices].astype(np.int64)
    mean, std = normalization_stats(images)
    groups = group_classes(counts, dataset_kind, thresholds)

    logger.debug(f"Contagens por classe: {counts.tolist()}")
    return LTDataset(
        images=images,
        labels=labels,
        class_counts=counts,
        rho=float(rho),
        n_max=int(n_max),
        seed=int(seed),
        groups=groups,
        val_images=dataset.test_images,
        val_labels=dataset.test_labels.astype(np.int64),
        dataset_kind=dataset_kind,
        mean=mean,
        std=std,
    )
