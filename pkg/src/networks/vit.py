"""ViT estudante com tokens CLS e DIST e duas cabeças de classificação."""

from dataclasses import dataclass
from typing import Any, Dict, List, Optional, Tuple

import numpy as np

from ..exceptions import ShapeError
from ..models.diagnostics import AttentionRecord
from ..tensor import Tensor, ops
from .layers import LayerNorm, Linear, trunc_normal
from .module import Module, ModuleList, Parameter


@dataclass
class ViTOutput:
    """Saída do forward; features são a saída da norma final nas posições dos tokens."""
    logits_cls: Tensor
    logits_dist: Tensor
    features_cls: Tensor
    features_dist: Tensor
    attention: Optional[AttentionRecord] = None
    # por bloco: (features CLS [B, D], features DIST [B, D]) na saída do bloco
    block_features: Optional[List[Tuple[np.ndarray, np.ndarray]]] = None


class Attention(Module):
    def __init__(self, dim: int, n_heads: int, rng: np.random.Generator):
        super().__init__()
        self.n_heads = n_heads
        self.head_dim = dim // n_heads
        self.scale = self.head_dim ** -0.5
        self.qkv = Linear(dim, 3 * dim, rng)
        self.proj = Linear(dim, dim, rng)

    def forward(self, x: Tensor) -> Tuple[Tensor, Tensor]:
        b, t, d = x.shape
        qkv = self.qkv(x).reshape(b, t, 3, self.n_heads, self.head_dim).transpose(2, 0, 3, 1, 4)
        q, k, v = qkv[0], qkv[1], qkv[2]
        scores = ops.mul(ops.matmul(q, k.transpose(0, 1, 3, 2)), self.scale)
        attn = ops.softmax(scores, axis=-1)
        out = ops.matmul(attn, v).transpose(0, 2, 1, 3).reshape(b, t, d)
        return self.proj(out), attn


class Block(Module):
    """Bloco pre-norm: x + attn(ln(x)), depois x + mlp(ln(x))."""

    def __init__(self, dim: int, n_heads: int, mlp_ratio: float, rng: np.random.Generator):
        super().__init__()
        hidden = int(dim * mlp_ratio)
        self.norm1 = LayerNorm(dim)
        self.attn = Attention(dim, n_heads, rng)
        self.norm2 = LayerNorm(dim)
        self.fc1 = Linear(dim, hidden, rng)
        self.fc2 = Linear(hidden, dim, rng)

    def forward(self, x: Tensor) -> Tuple[Tensor, Tensor]:
        attended, attn = self.attn(self.norm1(x))
        x = ops.add(x, attended)
        x = ops.add(x, self.fc2(ops.gelu(self.fc1(self.norm2(x)))))
        return x, attn


def patchify(inputs: Tensor, patch_size: int) -> Tensor:
    """[B, 3, H, W] -> [B, N, 3*p*p] em ordem de linha da grade."""
    b, c, h, w = inputs.shape
    if h % patch_size or w % patch_size:
        raise ShapeError("patchify", f"{h}x{w} não divisível pelo patch {patch_size}")
    gh, gw = h // patch_size, w // patch_size
    x = inputs.reshape(b, c, gh, patch_size, gw, patch_size).transpose(0, 2, 4, 1, 3, 5)
    return x.reshape(b, gh * gw, c * patch_size * patch_size)


class DualTokenViT(Module):
    """
    Transformer com token CLS (cabeça f^c) e token DIST (cabeça f^d).

    Com `dist_token=False` vira o ViT simples: um único token e
    `logits_dist` igual a `logits_cls`.
    """

    def __init__(self, num_classes: int, rng: np.random.Generator, image_size: int = 32,
                 patch_size: int = 4, embed_dim: int = 128, depth: int = 6, n_heads: int = 4,
                 mlp_ratio: float = 4.0, dist_token: bool = True):
        super().__init__()
        if image_size % patch_size:
            raise ShapeError("DualTokenViT", f"image_size {image_size} não divisível por {patch_size}")
        if embed_dim % n_heads:
            raise ShapeError("DualTokenViT", f"embed_dim {embed_dim} não divisível por {n_heads} cabeças")
        self.num_classes = num_classes
        self.image_size = image_size
        self.patch_size = patch_size
        self.embed_dim = embed_dim
        self.depth = depth
        self.n_heads = n_heads
        self.mlp_ratio = mlp_ratio
        self.has_dist_token = dist_token
        self.num_patches = (image_size // patch_size) ** 2
        self.num_prefix_tokens = 2 if dist_token else 1

        self.patch_embed = Linear(3 * patch_size * patch_size, embed_dim, rng)
        self.cls_token = Parameter(trunc_normal(rng, (1, embed_dim)))
        if dist_token:
            self.dist_token = Parameter(trunc_normal(rng, (1, embed_dim)))
        self.pos_embed = Parameter(trunc_normal(rng, (self.num_patches + self.num_prefix_tokens, embed_dim)))
        self.blocks = ModuleList(Block(embed_dim, n_heads, mlp_ratio, rng) for _ in range(depth))
        self.norm = LayerNorm(embed_dim)
        self.head_cls = Linear(embed_dim, num_classes, rng)
        if dist_token:
            self.head_dist = Linear(embed_dim, num_classes, rng)

    @property
    def sequence_length(self) -> int:
        return self.num_patches + self.num_prefix_tokens

    def head_parameters(self) -> List[Parameter]:
        heads = [self.head_cls] + ([self.head_dist] if self.has_dist_token else [])
        return [p for head in heads for p in head.parameters()]

    def reset_heads(self, rng: np.random.Generator):
        """Reinicializa as cabeças (cRT)."""
        self.head_cls = Linear(self.embed_dim, self.num_classes, rng)
        if self.has_dist_token:
            self.head_dist = Linear(self.embed_dim, self.num_classes, rng)

    def forward(self, inputs: Tensor, capture_attention: bool = False,
                capture_features: bool = False) -> ViTOutput:
        b, _, h, w = inputs.shape
        if h != self.image_size or w != self.image_size:
            raise ShapeError("vit_forward", f"entrada {h}x{w}, modelo espera {self.image_size}x{self.image_size}")
        x = self.patch_embed(patchify(inputs, self.patch_size))
        prefix = [ops.expand_batch(self.cls_token, b)]
        if self.has_dist_token:
            prefix.append(ops.expand_batch(self.dist_token, b))
        x = ops.embedding_add(ops.concat(prefix + [x], axis=1), self.pos_embed)

        attention, block_features = [], []
        dist_index = 1 if self.has_dist_token else 0
        for block in self.blocks:
            x, attn = block(x)
            if capture_attention:
                attention.append(attn.data.copy())
            if capture_features:
                block_features.append((x.data[:, 0].copy(), x.data[:, dist_index].copy()))

        x = self.norm(x)
        features_cls = x[:, 0]
        logits_cls = self.head_cls(features_cls)
        if self.has_dist_token:
            features_dist = x[:, 1]
            logits_dist = self.head_dist(features_dist)
        else:
            features_dist, logits_dist = features_cls, logits_cls

        return ViTOutput(
            logits_cls=logits_cls,
            logits_dist=logits_dist,
            features_cls=features_cls,
            features_dist=features_dist,
            attention=AttentionRecord(attention, self.num_prefix_tokens) if capture_attention else None,
            block_features=block_features if capture_features else None,
        )

    def architecture(self) -> Dict[str, Any]:
        return {
            "name": "dual_token_vit" if self.has_dist_token else "vit",
            "num_classes": self.num_classes,
            "image_size": self.image_size,
            "patch_size": self.patch_size,
            "embed_dim": self.embed_dim,
            "depth": self.depth,
            "n_heads": self.n_heads,
            "mlp_ratio": self.mlp_ratio,
            "dist_token": self.has_dist_token,
        }

    @classmethod
    def from_architecture(cls, arch: Dict[str, Any], rng: np.random.Generator) -> "DualTokenViT":
        return cls(
            num_classes=arch["num_classes"], rng=rng, image_size=arch["image_size"],
            patch_size=arch["patch_size"], embed_dim=arch["embed_dim"], depth=arch["depth"],
            n_heads=arch["n_heads"], mlp_ratio=arch["mlp_ratio"], dist_token=arch["dist_token"],
        )

    @staticmethod
    def parameter_count(num_classes: int, image_size: int, patch_size: int, embed_dim: int,
                        depth: int, mlp_ratio: float, dist_token: bool = True) -> int:
        """Contagem fechada de parâmetros treináveis."""
        d, c = embed_dim, num_classes
        hidden = int(d * mlp_ratio)
        n_tokens = 2 if dist_token else 1
        n_patches = (image_size // patch_size) ** 2
        patch = 3 * patch_size * patch_size * d + d
        embeddings = (n_patches + n_tokens) * d + n_tokens * d
        block = 2 * d + (3 * d * d + 3 * d) + (d * d + d) + 2 * d + (hidden * d + hidden) + (hidden * d + d)
        heads = n_tokens * (d * c + c)
        return patch + embeddings + depth * block + 2 * d + heads


def vit_forward(model: DualTokenViT, inputs, capture_attention: bool = False,
                capture_features: bool = False) -> ViTOutput:
    """Forward do estudante aceitando array ou Tensor."""
    if not isinstance(inputs, Tensor):
        inputs = Tensor(inputs)
    return model(inputs, capture_attention=capture_attention, capture_features=capture_features)
