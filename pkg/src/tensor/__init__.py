"""Núcleo de tensores com diferenciação automática."""

from .tensor import Tensor, GradTape, no_grad, is_grad_enabled
from . import ops
from .linalg import svd
from .checkpoint import (
    encode_tensors,
    decode_tensors,
    save_checkpoint,
    load_checkpoint,
)

__all__ = [
    "Tensor",
    "GradTape",
    "no_grad",
    "is_grad_enabled",
    "ops",
    "svd",
    "encode_tensors",
    "decode_tensors",
    "save_checkpoint",
    "load_checkpoint",
]
