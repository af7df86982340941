"""ResNet-32 professora para entradas 32x32."""

from typing import Any, Dict, List, Sequence, Tuple

import numpy as np

from ..tensor import Tensor, ops
from .layers import BatchNorm2d, Conv2d, Linear, NormedLinear
from .module import Module, ModuleList


class BasicBlock(Module):
    """Dois 3x3 com atalho opção A (subamostragem + zeros nos canais novos)."""

    def __init__(self, in_channels: int, out_channels: int, stride: int, rng: np.random.Generator):
        super().__init__()
        self.conv1 = Conv2d(in_channels, out_channels, 3, rng, stride=stride, padding=1)
        self.bn1 = BatchNorm2d(out_channels)
        self.conv2 = Conv2d(out_channels, out_channels, 3, rng, stride=1, padding=1)
        self.bn2 = BatchNorm2d(out_channels)
        self.stride = stride
        self.extra_channels = out_channels - in_channels

    def shortcut(self, x: Tensor) -> Tensor:
        if self.stride == 1 and self.extra_channels == 0:
            return x
        if self.stride != 1:
            x = x[:, :, ::self.stride, ::self.stride]
        if self.extra_channels:
            before = self.extra_channels // 2
            x = ops.pad(x, ((0, 0), (before, self.extra_channels - before), (0, 0), (0, 0)))
        return x

    def forward(self, x: Tensor) -> Tensor:
        out = ops.relu(self.bn1(self.conv1(x)))
        out = self.bn2(self.conv2(out))
        return ops.relu(ops.add(out, self.shortcut(x)))


class TeacherCNN(Module):
    """
    ResNet de 3 estágios (16/32/64 canais) com classificador de cosseno.

    `forward` devolve (cosseno z [B, C], features [B, 64]); os logits do
    professor são `logit_scale * z`.
    """

    def __init__(self, num_classes: int, rng: np.random.Generator, blocks_per_stage: int = 5,
                 widths: Sequence[int] = (16, 32, 64), logit_scale: float = 30.0,
                 normed_classifier: bool = True):
        super().__init__()
        self.num_classes = num_classes
        self.blocks_per_stage = blocks_per_stage
        self.widths = list(widths)
        self.logit_scale = logit_scale
        self.normed_classifier = normed_classifier

        self.conv1 = Conv2d(3, widths[0], 3, rng, padding=1)
        self.bn1 = BatchNorm2d(widths[0])
        blocks: List[Module] = []
        in_channels = widths[0]
        for stage, width in enumerate(widths):
            for i in range(blocks_per_stage):
                stride = 2 if stage > 0 and i == 0 else 1
                blocks.append(BasicBlock(in_channels, width, stride, rng))
                in_channels = width
        self.layers = ModuleList(blocks)
        if normed_classifier:
            self.classifier = NormedLinear(widths[-1], num_classes, rng)
        else:
            self.classifier = Linear(widths[-1], num_classes, rng, std=1.0 / np.sqrt(widths[-1]))

    @property
    def feature_width(self) -> int:
        return self.widths[-1]

    @property
    def depth(self) -> int:
        return 6 * self.blocks_per_stage + 2

    def forward(self, x: Tensor) -> Tuple[Tensor, Tensor]:
        out = ops.relu(self.bn1(self.conv1(x)))
        for block in self.layers:
            out = block(out)
        features = ops.avgpool(out)
        return self.classifier(features), features

    def architecture(self) -> Dict[str, Any]:
        return {
            "name": f"resnet{self.depth}",
            "num_classes": self.num_classes,
            "blocks_per_stage": self.blocks_per_stage,
            "widths": list(self.widths),
            "logit_scale": self.logit_scale,
            "normed_classifier": self.normed_classifier,
        }

    @classmethod
    def from_architecture(cls, arch: Dict[str, Any], rng: np.random.Generator) -> "TeacherCNN":
        return cls(
            num_classes=arch["num_classes"], rng=rng, blocks_per_stage=arch["blocks_per_stage"],
            widths=arch["widths"], logit_scale=arch["logit_scale"],
            normed_classifier=arch.get("normed_classifier", True),
        )


def teacher_forward(teacher: TeacherCNN, inputs) -> Tuple[Tensor, Tensor]:
    """Logits escalados e features de largura 64."""
    if not isinstance(inputs, Tensor):
        inputs = Tensor(inputs)
    z, features = teacher(inputs)
    scale = teacher.logit_scale if teacher.normed_classifier else 1.0
    return ops.mul(z, scale), features
