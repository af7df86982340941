"""Camadas básicas sobre as primitivas de src.tensor.ops."""

import numpy as np

from ..tensor import Tensor, ops
from .module import Module, Parameter


def trunc_normal(rng: np.random.Generator, shape, std: float = 0.02) -> np.ndarray:
    """Normal truncada em +-2 desvios (reamostragem)."""
    values = rng.normal(0.0, std, size=shape)
    outside = np.abs(values) > 2 * std
    while outside.any():
        values[outside] = rng.normal(0.0, std, size=int(outside.sum()))
        outside = np.abs(values) > 2 * std
    return values.astype(np.float32)


class Linear(Module):
    """y = x @ W + b com W [entrada, saída]."""

    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator,
                 bias: bool = True, std: float = 0.02):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        self.weight = Parameter(trunc_normal(rng, (in_features, out_features), std))
        self.bias = Parameter(np.zeros(out_features)) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        out = ops.matmul(x, self.weight)
        return ops.add(out, self.bias) if self.bias is not None else out


class NormedLinear(Module):
    """Classificador de cosseno: saída em [-1, 1], escalada fora da camada."""

    def __init__(self, in_features: int, out_features: int, rng: np.random.Generator):
        super().__init__()
        self.in_features = in_features
        self.out_features = out_features
        weight = rng.uniform(-1.0, 1.0, size=(in_features, out_features))
        self.weight = Parameter(weight / np.linalg.norm(weight, axis=0, keepdims=True))

    def forward(self, x: Tensor) -> Tensor:
        return ops.matmul(ops.l2_normalize(x, axis=-1), ops.l2_normalize(self.weight, axis=0))


class LayerNorm(Module):
    def __init__(self, dim: int, eps: float = 1e-5):
        super().__init__()
        self.eps = eps
        self.weight = Parameter(np.ones(dim))
        self.bias = Parameter(np.zeros(dim))

    def forward(self, x: Tensor) -> Tensor:
        return ops.layernorm(x, self.weight, self.bias, eps=self.eps)


class Conv2d(Module):
    """Convolução NCHW com inicialização He (fan-in)."""

    def __init__(self, in_channels: int, out_channels: int, kernel_size: int,
                 rng: np.random.Generator, stride: int = 1, padding: int = 0, bias: bool = False):
        super().__init__()
        self.stride = stride
        self.padding = padding
        fan_in = in_channels * kernel_size * kernel_size
        self.weight = Parameter(
            rng.normal(0.0, np.sqrt(2.0 / fan_in), size=(out_channels, in_channels, kernel_size, kernel_size))
        )
        self.bias = Parameter(np.zeros(out_channels)) if bias else None

    def forward(self, x: Tensor) -> Tensor:
        return ops.conv2d(x, self.weight, self.bias, stride=self.stride, padding=self.padding)


class BatchNorm2d(Module):
    def __init__(self, channels: int, momentum: float = 0.1, eps: float = 1e-5):
        super().__init__()
        self.momentum = momentum
        self.eps = eps
        self.weight = Parameter(np.ones(channels))
        self.bias = Parameter(np.zeros(channels))
        self.register_buffer("running_mean", np.zeros(channels, dtype=np.float32))
        self.register_buffer("running_var", np.ones(channels, dtype=np.float32))

    def forward(self, x: Tensor) -> Tensor:
        return ops.batch_norm2d(
            x, self.weight, self.bias, self.running_mean, self.running_var,
            training=self.training, update_stats=not self.stats_frozen,
            momentum=self.momentum, eps=self.eps,
        )
