"""Redes: ViT estudante de dois tokens e ResNet professora."""

from .module import Module, ModuleList, Parameter
from .layers import Linear, NormedLinear, LayerNorm, Conv2d, BatchNorm2d, trunc_normal
from .vit import DualTokenViT, ViTOutput, vit_forward, patchify
from .resnet import TeacherCNN, BasicBlock, teacher_forward
from .predictions import hard_label, predict

__all__ = [
    "Module",
    "ModuleList",
    "Parameter",
    "Linear",
    "NormedLinear",
    "LayerNorm",
    "Conv2d",
    "BatchNorm2d",
    "trunc_normal",
    "DualTokenViT",
    "ViTOutput",
    "vit_forward",
    "patchify",
    "TeacherCNN",
    "BasicBlock",
    "teacher_forward",
    "hard_label",
    "predict",
]
