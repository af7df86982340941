"""Serviço de inferência e avaliação por grupo de classes."""

import logging
from dataclasses import dataclass
from typing import Dict, Optional

import numpy as np

from ..data.longtail import to_input
from ..diagnostics.divergence import cls_dist_divergence
from ..exceptions import ShapeError
from ..models.dataset import ClassGroup, LTDataset
from ..models.training_results import EvaluationResult, GroupAccuracy, Predictions
from ..networks.predictions import hard_label, predict
from ..networks.resnet import TeacherCNN, teacher_forward
from ..networks.vit import DualTokenViT, vit_forward
from ..tensor import no_grad
from ..utils.logger import LogContext
from .model_store import load_student

logger = logging.getLogger("deit_lt.evaluation")


@dataclass
class StudentOutputs:
    """Saídas concatenadas do estudante sobre um conjunto de entradas."""
    logits_cls: np.ndarray
    logits_dist: np.ndarray
    features_cls: np.ndarray
    features_dist: np.ndarray


def compute_group_accuracy(predictions: np.ndarray, labels: np.ndarray,
                           groups: Dict[int, ClassGroup]) -> GroupAccuracy:
    """Acurácia geral e média por amostra dentro de cada grupo (NaN se o grupo não tem amostras)."""
    predictions = np.asarray(predictions)
    labels = np.asarray(labels)
    if predictions.shape != labels.shape:
        raise ShapeError("compute_group_accuracy", f"predições {predictions.shape} vs rótulos {labels.shape}")
    correct = predictions == labels
    overall = float(correct.mean()) if len(labels) else float("nan")

    per_group = {}
    for group in ClassGroup:
        classes = [c for c, g in groups.items() if g == group]
        mask = np.isin(labels, classes)
        per_group[group] = float(correct[mask].mean()) if mask.any() else float("nan")
    return GroupAccuracy(
        overall=overall,
        head=per_group[ClassGroup.HEAD],
        mid=per_group[ClassGroup.MID],
        tail=per_group[ClassGroup.TAIL],
    )


def collect_outputs(student: DualTokenViT, inputs: np.ndarray, batch_size: int = 256) -> StudentOutputs:
    """Forward em modo de avaliação, por lotes, sem gravar o grafo."""
    student.eval()
    parts = {"logits_cls": [], "logits_dist": [], "features_cls": [], "features_dist": []}
    with no_grad():
        for start in range(0, len(inputs), batch_size):
            out = vit_forward(student, inputs[start:start + batch_size])
            parts["logits_cls"].append(out.logits_cls.data)
            parts["logits_dist"].append(out.logits_dist.data)
            parts["features_cls"].append(out.features_cls.data)
            parts["features_dist"].append(out.features_dist.data)
    if not parts["logits_cls"]:
        empty_logits = np.zeros((0, student.num_classes), dtype=np.float32)
        empty_features = np.zeros((0, student.embed_dim), dtype=np.float32)
        return StudentOutputs(empty_logits, empty_logits, empty_features, empty_features)
    return StudentOutputs(**{key: np.concatenate(value) for key, value in parts.items()})


def infer(student: DualTokenViT, inputs: np.ndarray, batch_size: int = 256) -> Predictions:
    outputs = collect_outputs(student, inputs, batch_size)
    return predict(outputs.logits_cls, outputs.logits_dist)


def evaluate_student(student: DualTokenViT, dataset: LTDataset, batch_size: int = 256,
                     split: str = "val") -> EvaluationResult:
    """Acurácias das três regras de decisão e distância de cosseno CLS/DIST."""
    if split == "val":
        images, labels = dataset.val_images, dataset.val_labels
    else:
        images, labels = dataset.images, dataset.labels
    outputs = collect_outputs(student, to_input(images, dataset.mean, dataset.std), batch_size)
    predictions = predict(outputs.logits_cls, outputs.logits_dist)
    divergence = cls_dist_divergence(outputs.features_cls, outputs.features_dist)
    return EvaluationResult(
        averaged=compute_group_accuracy(predictions.averaged, labels, dataset.groups),
        cls_only=compute_group_accuracy(predictions.cls_only, labels, dataset.groups),
        dist_only=compute_group_accuracy(predictions.dist_only, labels, dataset.groups),
        cosine_cls_dist=divergence.mean_distance,
        n_samples=len(labels),
        split=split,
    )


def evaluate_teacher(teacher: TeacherCNN, dataset: LTDataset, batch_size: int = 256) -> GroupAccuracy:
    teacher.eval()
    inputs = to_input(dataset.val_images, dataset.mean, dataset.std)
    predictions = []
    with no_grad():
        for start in range(0, len(inputs), batch_size):
            logits, _ = teacher_forward(teacher, inputs[start:start + batch_size])
            predictions.append(hard_label(logits))
    predicted = np.concatenate(predictions) if predictions else np.zeros(0, dtype=np.int64)
    return compute_group_accuracy(predicted, dataset.val_labels, dataset.groups)


def evaluate(checkpoint, dataset: LTDataset, split: str = "val", batch_size: int = 256,
             student: Optional[DualTokenViT] = None) -> EvaluationResult:
    """Avalia um checkpoint de estudante no split pedido."""
    with LogContext(logger, "Avaliação", str(checkpoint)):
        if student is None:
            student, _, _ = load_student(checkpoint)
        result = evaluate_student(student, dataset, batch_size, split)
    logger.info(
        f"Acurácia ({split}): avg={result.averaged.overall:.4f} "
        f"cls={result.cls_only.overall:.4f} dist={result.dist_only.overall:.4f}"
    )
    return result
