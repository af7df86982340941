"""Entropia das predições do professor em imagens fracas e fora de distribuição."""

import logging

import numpy as np

from ..data.augment import StrongAugmentRecipe, strong_augment, weak_augment
from ..data.longtail import to_input
from ..data.mixing import mix_batch
from ..models.dataset import LabeledBatch, LTDataset
from ..models.diagnostics import EntropySummary
from ..networks.resnet import TeacherCNN, teacher_forward
from ..tensor import no_grad, ops
from ..utils.validators import require_nonnegative

logger = logging.getLogger("deit_lt.diagnostics")


def prediction_entropy(probs) -> np.ndarray:
    """H = -sum p log p em nats, com 0 log 0 = 0."""
    p = require_nonnegative("probs", probs).astype(np.float64)
    logs = np.log(np.where(p > 0, p, 1.0))
    return -(p * logs).sum(axis=-1)


def teacher_probabilities(teacher: TeacherCNN, inputs: np.ndarray, batch_size: int = 256) -> np.ndarray:
    teacher.eval()
    chunks = []
    with no_grad():
        for start in range(0, len(inputs), batch_size):
            logits, _ = teacher_forward(teacher, inputs[start:start + batch_size])
            chunks.append(ops.softmax(logits, axis=-1).data)
    return np.concatenate(chunks) if chunks else np.zeros((0, teacher.num_classes))


def entropy_report(teacher: TeacherCNN, dataset: LTDataset, recipe: StrongAugmentRecipe,
                   n_samples: int, seed: int, mixup_alpha: float = 0.8, cutmix_alpha: float = 1.0,
                   switch_prob: float = 0.5, batch_size: int = 256) -> EntropySummary:
    """
    Entropia média (e desvio) sobre `n_samples` imagens de treino com aumento
    fraco versus as mesmas imagens com aumento forte e mistura.
    """
    rng = np.random.default_rng(seed)
    n = min(n_samples, dataset.size)
    indices = rng.choice(dataset.size, size=n, replace=False)
    images = dataset.images[indices]
    labels = dataset.labels[indices]

    weak = np.stack([weak_augment(img, rng) for img in images])
    strong = np.stack([strong_augment(img, rng, recipe) for img in images])
    weak_inputs = to_input(weak, dataset.mean, dataset.std)
    strong_inputs = to_input(strong, dataset.mean, dataset.std)

    mixed = []
    for start in range(0, n, batch_size):
        batch = LabeledBatch(strong_inputs[start:start + batch_size], labels[start:start + batch_size])
        mixed.append(mix_batch(batch, rng, dataset.num_classes, mixup_alpha, cutmix_alpha, switch_prob).inputs)
    ood_inputs = np.concatenate(mixed)

    in_entropy = prediction_entropy(teacher_probabilities(teacher, weak_inputs, batch_size))
    ood_entropy = prediction_entropy(teacher_probabilities(teacher, ood_inputs, batch_size))
    logger.debug(f"Entropia: in={in_entropy.mean():.4f} ood={ood_entropy.mean():.4f} (nats)")
    return EntropySummary(
        in_mean=float(in_entropy.mean()),
        in_std=float(in_entropy.std()),
        ood_mean=float(ood_entropy.mean()),
        ood_std=float(ood_entropy.std()),
        n_samples=n,
    )
