"""Pipeline de dados: split long-tailed, aumentos, mistura e carregamento."""

from .longtail import (
    longtail_counts,
    make_longtailed,
    group_classes,
    normalization_stats,
    to_input,
)
from .augment import StrongAugmentRecipe, weak_augment, strong_augment, resize_bilinear
from .mixing import smooth_one_hot, mixup, cutmix, cutmix_box, mix_batch
from .sampler import ClassBalancedSampler, BatchLoader

__all__ = [
    "longtail_counts",
    "make_longtailed",
    "group_classes",
    "normalization_stats",
    "to_input",
    "StrongAugmentRecipe",
    "weak_augment",
    "strong_augment",
    "resize_bilinear",
    "smooth_one_hot",
    "mixup",
    "cutmix",
    "cutmix_box",
    "mix_batch",
    "ClassBalancedSampler",
    "BatchLoader",
]
