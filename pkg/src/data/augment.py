"""Pilhas de aumento fraca (professor) e forte (estudante) sobre imagens HWC uint8."""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

# Pesos de luminância ITU-R 601
_LUMA = np.array([0.299, 0.587, 0.114], dtype=np.float32)
_PLACEMENT_ATTEMPTS = 10


@dataclass(frozen=True)
class StrongAugmentRecipe:
    """Parâmetros da pilha forte; probabilidade 0 desliga o estágio."""
    crop_prob: float = 1.0
    crop_scale: Tuple[float, float] = (0.08, 1.0)
    crop_ratio: Tuple[float, float] = (0.75, 4.0 / 3.0)
    flip_prob: float = 0.5
    jitter_prob: float = 1.0
    jitter_strength: float = 0.3
    solarize_prob: float = 0.0
    solarize_threshold: int = 128
    grayscale_prob: float = 0.0
    erase_prob: float = 0.25
    erase_area: Tuple[float, float] = (0.02, 1.0 / 3.0)
    erase_ratio: Tuple[float, float] = (0.3, 3.3)

    @classmethod
    def from_settings(cls, settings) -> "StrongAugmentRecipe":
        return cls(
            crop_prob=settings.crop_prob,
            crop_scale=tuple(settings.crop_scale),
            crop_ratio=tuple(settings.crop_ratio),
            flip_prob=settings.flip_prob,
            jitter_prob=settings.jitter_prob,
            jitter_strength=settings.jitter_strength,
            solarize_prob=settings.solarize_prob,
            grayscale_prob=settings.grayscale_prob,
            erase_prob=settings.erase_prob,
            erase_area=tuple(settings.erase_area),
            erase_ratio=tuple(settings.erase_ratio),
        )

    @classmethod
    def disabled(cls) -> "StrongAugmentRecipe":
        return cls(crop_prob=0.0, flip_prob=0.0, jitter_prob=0.0, solarize_prob=0.0,
                   grayscale_prob=0.0, erase_prob=0.0)


def weak_augment(image: np.ndarray, rng: np.random.Generator, padding: int = 4,
                 flip_prob: float = 0.5, offset: Optional[Tuple[int, int]] = None,
                 flip: Optional[bool] = None) -> np.ndarray:
    """
    Recorte aleatório com preenchimento de zeros e espelhamento horizontal.

    `offset` e `flip` forçam as escolhas aleatórias; offset (padding, padding)
    devolve a imagem original.
    """
    h, w = image.shape[:2]
    padded = np.pad(image, ((padding, padding), (padding, padding), (0, 0)))
    if offset is None:
        dy, dx = (int(v) for v in rng.integers(0, 2 * padding + 1, size=2))
    else:
        dy, dx = offset
    out = padded[dy:dy + h, dx:dx + w]
    if flip is None:
        flip = rng.random() < flip_prob
    if flip:
        out = out[:, ::-1]
    return np.ascontiguousarray(out)


def resize_bilinear(image: np.ndarray, out_h: int, out_w: int) -> np.ndarray:
    """Redimensionamento bilinear com centros de pixel alinhados (half-pixel)."""
    in_h, in_w = image.shape[:2]
    src = image.astype(np.float32)
    ys = np.clip((np.arange(out_h) + 0.5) * in_h / out_h - 0.5, 0, in_h - 1)
    xs = np.clip((np.arange(out_w) + 0.5) * in_w / out_w - 0.5, 0, in_w - 1)
    y0 = np.floor(ys).astype(int)
    x0 = np.floor(xs).astype(int)
    y1 = np.minimum(y0 + 1, in_h - 1)
    x1 = np.minimum(x0 + 1, in_w - 1)
    wy = (ys - y0)[:, None, None]
    wx = (xs - x0)[None, :, None]
    top = src[y0][:, x0] * (1 - wx) + src[y0][:, x1] * wx
    bottom = src[y1][:, x0] * (1 - wx) + src[y1][:, x1] * wx
    return top * (1 - wy) + bottom * wy


def _sample_box(rng: np.random.Generator, h: int, w: int, area_range, ratio_range,
                allow_full: bool) -> Optional[Tuple[int, int, int, int]]:
    """Sorteia (top, left, altura, largura) com área e razão de aspecto dadas."""
    area = h * w
    log_ratio = (math.log(ratio_range[0]), math.log(ratio_range[1]))
    for _ in range(_PLACEMENT_ATTEMPTS):
        target_area = area * rng.uniform(area_range[0], area_range[1])
        aspect = math.exp(rng.uniform(*log_ratio))
        bh = int(round(math.sqrt(target_area * aspect)))
        bw = int(round(math.sqrt(target_area / aspect)))
        if allow_full:
            bh, bw = min(bh, h), min(bw, w)
        if 0 < bh <= h and 0 < bw <= w:
            top = int(rng.integers(0, h - bh + 1))
            left = int(rng.integers(0, w - bw + 1))
            return top, left, bh, bw
    return None


def _color_jitter(image: np.ndarray, rng: np.random.Generator, strength: float) -> np.ndarray:
    x = image
    brightness, contrast, saturation = rng.uniform(max(0.0, 1 - strength), 1 + strength, size=3)
    x = np.clip(x * brightness, 0, 255)
    gray_mean = float((x @ _LUMA).mean())
    x = np.clip((x - gray_mean) * contrast + gray_mean, 0, 255)
    gray = (x @ _LUMA)[..., None]
    return np.clip((x - gray) * saturation + gray, 0, 255)


def strong_augment(image: np.ndarray, rng: np.random.Generator,
                   recipe: StrongAugmentRecipe = StrongAugmentRecipe()) -> np.ndarray:
    """
    Pilha forte na ordem: recorte redimensionado, espelhamento, jitter de cor,
    solarização, tons de cinza e apagamento aleatório com ruído por pixel.
    """
    h, w = image.shape[:2]
    x = image.astype(np.float32)

    if rng.random() < recipe.crop_prob:
        box = _sample_box(rng, h, w, recipe.crop_scale, recipe.crop_ratio, allow_full=False)
        if box is None:
            box = (0, 0, h, w)
        top, left, bh, bw = box
        x = resize_bilinear(x[top:top + bh, left:left + bw], h, w)

    if rng.random() < recipe.flip_prob:
        x = x[:, ::-1]

    if rng.random() < recipe.jitter_prob and recipe.jitter_strength > 0:
        x = _color_jitter(x, rng, recipe.jitter_strength)

    if rng.random() < recipe.solarize_prob:
        x = np.where(x >= recipe.solarize_threshold, 255.0 - x, x)

    if rng.random() < recipe.grayscale_prob:
        x = np.repeat((x @ _LUMA)[..., None], 3, axis=-1)

    out = np.clip(np.rint(x), 0, 255).astype(np.uint8)

    if rng.random() < recipe.erase_prob:
        box = _sample_box(rng, h, w, recipe.erase_area, recipe.erase_ratio, allow_full=True)
        if box is not None:
            top, left, bh, bw = box
            out[top:top + bh, left:left + bw] = rng.integers(
                0, 256, size=(bh, bw, image.shape[2]), dtype=np.uint8
            )

    return np.ascontiguousarray(out)
