"""Modelos para métricas de treino e avaliação."""

from dataclasses import dataclass, field, fields
from typing import Any, Dict, List

import numpy as np


@dataclass
class LossBreakdown:
    """Termos da perda de um passo de destilação."""
    total: float
    cls: float
    dist: float
    teacher_agree: float
    batch_size: int


@dataclass
class GroupAccuracy:
    """Acurácia geral e por grupo de classes."""
    overall: float
    head: float
    mid: float
    tail: float


@dataclass
class Predictions:
    """Predições das duas cabeças e da média."""
    averaged: np.ndarray
    cls_only: np.ndarray
    dist_only: np.ndarray


@dataclass
class EvaluationResult:
    """Avaliação de um estudante num split balanceado."""
    averaged: GroupAccuracy
    cls_only: GroupAccuracy
    dist_only: GroupAccuracy
    cosine_cls_dist: float
    n_samples: int
    split: str = "val"

    def rows(self) -> List[Dict[str, Any]]:
        return [
            {"predictor": name, "overall": acc.overall, "head": acc.head, "mid": acc.mid, "tail": acc.tail}
            for name, acc in (("avg", self.averaged), ("cls", self.cls_only), ("dist", self.dist_only))
        ]


@dataclass
class EpochMetrics:
    """Linha do CSV de métricas do estudante."""
    epoch: int
    lr: float
    loss_cls: float
    loss_dist: float
    acc_avg: float
    acc_cls: float
    acc_dist: float
    head: float
    mid: float
    tail: float
    cosine_cls_dist: float
    teacher_agree: float

    @classmethod
    def columns(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    def to_row(self) -> Dict[str, Any]:
        return {name: getattr(self, name) for name in self.columns()}


@dataclass
class TeacherEpochMetrics:
    """Linha do CSV de métricas do professor."""
    epoch: int
    lr: float
    loss: float
    acc: float
    head: float
    mid: float
    tail: float

    @classmethod
    def columns(cls) -> List[str]:
        return [f.name for f in fields(cls)]

    def to_row(self) -> Dict[str, Any]:
        return {name: getattr(self, name) for name in self.columns()}


@dataclass
class RunMetrics:
    """Registros por época de uma execução."""
    records: List[Any] = field(default_factory=list)
    evaluations: List[EvaluationResult] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)
