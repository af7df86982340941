"""Diagnósticos: localidade, rollout, rank de features, entropia e divergência."""

from .locality import mean_attention_distance, patch_centers, pixel_distances
from .rollout import attention_rollout, rollout_matrix
from .rank import feature_rank, reconstruction_error
from .entropy import prediction_entropy, teacher_probabilities, entropy_report
from .divergence import cls_dist_divergence

__all__ = [
    "mean_attention_distance",
    "patch_centers",
    "pixel_distances",
    "attention_rollout",
    "rollout_matrix",
    "feature_rank",
    "reconstruction_error",
    "prediction_entropy",
    "teacher_probabilities",
    "entropy_report",
    "cls_dist_divergence",
]
