"""Otimizadores, SAM e agenda de taxa de aprendizado."""

from .optimizers import Optimizer, AdamW, SGD, adamw_step, decay_mask
from .sam import SAM, sam_step
from .schedule import cosine_lr

__all__ = [
    "Optimizer",
    "AdamW",
    "SGD",
    "adamw_step",
    "decay_mask",
    "SAM",
    "sam_step",
    "cosine_lr",
]
