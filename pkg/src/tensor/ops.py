"""Primitivas diferenciáveis sobre Tensor.

Cada primitiva calcula a saída com numpy e registra o produto
vetor-Jacobiano correspondente. Broadcasting só é aceito quando o shape de
um operando é sufixo do outro (dimensões de lote à esquerda); o chamador
faz reshape explícito nos demais casos.
"""

from typing import Optional, Sequence, Tuple, Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..exceptions import NumericError, ShapeError
from .tensor import Tensor, make_result

Operand = Union[Tensor, np.ndarray, float, int]

_GELU_C = np.sqrt(2.0 / np.pi)


def as_tensor(value: Operand, like: Optional[Tensor] = None) -> Tensor:
    if isinstance(value, Tensor):
        return value
    dtype = like.dtype if like is not None else None
    return Tensor(np.asarray(value, dtype=dtype))


def _broadcast_shape(op: str, a: Tuple[int, ...], b: Tuple[int, ...]) -> Tuple[int, ...]:
    if a == b:
        return a
    if len(b) <= len(a) and a[len(a) - len(b):] == b:
        return a
    if len(a) < len(b) and b[len(b) - len(a):] == a:
        return b
    raise ShapeError(op, f"shapes {a} e {b} exigem broadcasting geral")


def _unbroadcast(grad: np.ndarray, shape: Tuple[int, ...]) -> np.ndarray:
    if grad.shape == shape:
        return grad
    lead = grad.ndim - len(shape)
    return grad.sum(axis=tuple(range(lead))).reshape(shape)


def _binary_operands(op: str, a: Operand, b: Operand) -> Tuple[Tensor, Tensor]:
    like = a if isinstance(a, Tensor) else b if isinstance(b, Tensor) else None
    ta, tb = as_tensor(a, like), as_tensor(b, like)
    _broadcast_shape(op, ta.shape, tb.shape)
    return ta, tb


# ---------------------------------------------------------------------------
# Aritmética elementar
# ---------------------------------------------------------------------------

def add(a: Operand, b: Operand) -> Tensor:
    a, b = _binary_operands("add", a, b)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(g, b.shape)

    return make_result(a.data + b.data, (a, b), backward, "add")


def sub(a: Operand, b: Operand) -> Tensor:
    a, b = _binary_operands("sub", a, b)

    def backward(g):
        return _unbroadcast(g, a.shape), _unbroadcast(-g, b.shape)

    return make_result(a.data - b.data, (a, b), backward, "sub")


def mul(a: Operand, b: Operand) -> Tensor:
    a, b = _binary_operands("mul", a, b)

    def backward(g):
        return _unbroadcast(g * b.data, a.shape), _unbroadcast(g * a.data, b.shape)

    return make_result(a.data * b.data, (a, b), backward, "mul")


def div(a: Operand, b: Operand) -> Tensor:
    a, b = _binary_operands("div", a, b)

    def backward(g):
        return (
            _unbroadcast(g / b.data, a.shape),
            _unbroadcast(-g * a.data / (b.data * b.data), b.shape),
        )

    return make_result(a.data / b.data, (a, b), backward, "div")


def neg(x: Tensor) -> Tensor:
    return make_result(-x.data, (x,), lambda g: (-g,), "neg")


def exp(x: Tensor) -> Tensor:
    out = np.exp(x.data)
    return make_result(out, (x,), lambda g: (g * out,), "exp")


def log(x: Tensor) -> Tensor:
    return make_result(np.log(x.data), (x,), lambda g: (g / x.data,), "log")


# ---------------------------------------------------------------------------
# Álgebra linear e reorganização
# ---------------------------------------------------------------------------

def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Produto matricial; `b` 2-D é compartilhado por todas as linhas de `a`."""
    if a.ndim < 2 or b.ndim < 2:
        raise ShapeError("matmul", f"operandos precisam de 2 dimensões: {a.shape} x {b.shape}")
    if a.shape[-1] != b.shape[-2]:
        raise ShapeError("matmul", f"dimensões internas {a.shape[-1]} != {b.shape[-2]}")

    if b.ndim == 2:
        k, n = b.shape

        def backward(g):
            grad_a = g @ b.data.T
            grad_b = a.data.reshape(-1, k).T @ g.reshape(-1, n)
            return grad_a, grad_b
    else:
        if a.shape[:-2] != b.shape[:-2]:
            raise ShapeError("matmul", f"dimensões de lote {a.shape[:-2]} != {b.shape[:-2]}")

        def backward(g):
            return g @ np.swapaxes(b.data, -1, -2), np.swapaxes(a.data, -1, -2) @ g

    return make_result(a.data @ b.data, (a, b), backward, "matmul")


def transpose(x: Tensor, axes: Optional[Sequence[int]] = None) -> Tensor:
    axes = tuple(axes) if axes is not None else tuple(reversed(range(x.ndim)))
    inverse = tuple(np.argsort(axes))
    return make_result(np.transpose(x.data, axes), (x,), lambda g: (np.transpose(g, inverse),), "transpose")


def reshape(x: Tensor, shape: Sequence[int]) -> Tensor:
    try:
        out = x.data.reshape(tuple(shape))
    except ValueError as e:
        raise ShapeError("reshape", f"{x.shape} -> {tuple(shape)}", e)
    return make_result(out, (x,), lambda g: (g.reshape(x.shape),), "reshape")


def getitem(x: Tensor, index) -> Tensor:
    out = x.data[index]

    def backward(g):
        grad = np.zeros_like(x.data)
        np.add.at(grad, index, g)
        return (grad,)

    return make_result(np.array(out, copy=True), (x,), backward, "getitem")


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    tensors = [as_tensor(t) for t in tensors]
    axis = axis % tensors[0].ndim
    reference = tensors[0].shape
    for t in tensors[1:]:
        if t.ndim != len(reference) or any(
            d != r for i, (d, r) in enumerate(zip(t.shape, reference)) if i != axis
        ):
            raise ShapeError("concat", f"{t.shape} incompatível com {reference} no eixo {axis}")
    splits = np.cumsum([t.shape[axis] for t in tensors])[:-1]

    def backward(g):
        return tuple(np.split(g, splits, axis=axis))

    return make_result(np.concatenate([t.data for t in tensors], axis=axis), tensors, backward, "concat")


def expand_batch(x: Tensor, batch: int) -> Tensor:
    """Repete `x` ao longo de uma nova dimensão de lote à esquerda."""
    out = np.broadcast_to(x.data, (batch,) + x.shape).copy()
    return make_result(out, (x,), lambda g: (g.sum(axis=0),), "expand_batch")


def embedding_add(x: Tensor, embedding: Tensor) -> Tensor:
    """Soma embeddings [T, D] a cada sequência de `x` [B, T, D]."""
    if x.shape[1:] != embedding.shape:
        raise ShapeError("embedding_add", f"sequência {x.shape} vs embedding {embedding.shape}")
    return make_result(x.data + embedding.data, (x, embedding), lambda g: (g, g.sum(axis=0)), "embedding_add")


def pad(x: Tensor, pad_width: Sequence[Tuple[int, int]]) -> Tensor:
    """Preenchimento constante com zeros."""
    pad_width = tuple(tuple(p) for p in pad_width)
    slices = tuple(slice(before, before + size) for (before, _), size in zip(pad_width, x.shape))
    return make_result(np.pad(x.data, pad_width), (x,), lambda g: (g[slices],), "pad")


# ---------------------------------------------------------------------------
# Reduções
# ---------------------------------------------------------------------------

def _normalize_axis(axis, ndim: int) -> Tuple[int, ...]:
    if axis is None:
        return tuple(range(ndim))
    if isinstance(axis, int):
        axis = (axis,)
    return tuple(a % ndim for a in axis)


def sum(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:  # noqa: A001
    axes = _normalize_axis(axis, x.ndim)
    out = x.data.sum(axis=axes, keepdims=keepdims)

    def backward(g):
        if not keepdims:
            g = np.expand_dims(g, axes)
        return (np.ascontiguousarray(np.broadcast_to(g, x.shape)),)

    return make_result(np.asarray(out), (x,), backward, "sum")


def mean(x: Tensor, axis=None, keepdims: bool = False) -> Tensor:
    axes = _normalize_axis(axis, x.ndim)
    count = int(np.prod([x.shape[a] for a in axes])) if axes else 1
    return mul(sum(x, axis=axes, keepdims=keepdims), 1.0 / count)


# ---------------------------------------------------------------------------
# Ativações e normalizações
# ---------------------------------------------------------------------------

def relu(x: Tensor) -> Tensor:
    mask = x.data > 0
    return make_result(np.where(mask, x.data, 0).astype(x.dtype), (x,), lambda g: (g * mask,), "relu")


def gelu(x: Tensor) -> Tensor:
    """GELU na aproximação por tanh."""
    v = x.data
    inner = _GELU_C * (v + 0.044715 * v ** 3)
    t = np.tanh(inner)
    out = 0.5 * v * (1.0 + t)

    def backward(g):
        d_inner = _GELU_C * (1.0 + 3.0 * 0.044715 * v ** 2)
        return (g * (0.5 * (1.0 + t) + 0.5 * v * (1.0 - t * t) * d_inner),)

    return make_result(out.astype(x.dtype), (x,), backward, "gelu")


def _check_finite(op: str, values: np.ndarray):
    if not np.isfinite(values).all():
        raise NumericError(op, "entrada contém NaN ou infinito")


def softmax(x: Tensor, axis: int = -1) -> Tensor:
    _check_finite("softmax", x.data)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    e = np.exp(shifted)
    out = e / e.sum(axis=axis, keepdims=True)

    def backward(g):
        return (out * (g - (g * out).sum(axis=axis, keepdims=True)),)

    return make_result(out, (x,), backward, "softmax")


def log_softmax(x: Tensor, axis: int = -1) -> Tensor:
    _check_finite("log_softmax", x.data)
    shifted = x.data - x.data.max(axis=axis, keepdims=True)
    out = shifted - np.log(np.exp(shifted).sum(axis=axis, keepdims=True))

    def backward(g):
        return (g - np.exp(out) * g.sum(axis=axis, keepdims=True),)

    return make_result(out, (x,), backward, "log_softmax")


def layernorm(x: Tensor, gamma: Optional[Tensor] = None, beta: Optional[Tensor] = None,
              eps: float = 1e-5) -> Tensor:
    """Normaliza o último eixo; vetor constante resulta em zeros."""
    d = x.shape[-1]
    for param in (gamma, beta):
        if param is not None and param.shape != (d,):
            raise ShapeError("layernorm", f"parâmetro {param.shape} != ({d},)")
    mu = x.data.mean(axis=-1, keepdims=True)
    centered = x.data - mu
    inv = 1.0 / np.sqrt((centered ** 2).mean(axis=-1, keepdims=True) + eps)
    xhat = centered * inv
    out = xhat
    if gamma is not None:
        out = out * gamma.data
    if beta is not None:
        out = out + beta.data
    parents = [x] + [p for p in (gamma, beta) if p is not None]
    lead = tuple(range(x.ndim - 1))

    def backward(g):
        dxhat = g * gamma.data if gamma is not None else g
        dx = inv / d * (
            d * dxhat
            - dxhat.sum(axis=-1, keepdims=True)
            - xhat * (dxhat * xhat).sum(axis=-1, keepdims=True)
        )
        grads = [dx]
        if gamma is not None:
            grads.append((g * xhat).sum(axis=lead))
        if beta is not None:
            grads.append(g.sum(axis=lead))
        return tuple(grads)

    return make_result(out.astype(x.dtype), parents, backward, "layernorm")


def l2_normalize(x: Tensor, axis: int = -1, eps: float = 1e-12) -> Tensor:
    norm = np.maximum(np.sqrt((x.data ** 2).sum(axis=axis, keepdims=True)), eps)
    out = x.data / norm

    def backward(g):
        return ((g - out * (g * out).sum(axis=axis, keepdims=True)) / norm,)

    return make_result(out, (x,), backward, "l2_normalize")


def batch_norm2d(x: Tensor, gamma: Tensor, beta: Tensor, running_mean: np.ndarray,
                 running_var: np.ndarray, training: bool, update_stats: bool = True,
                 momentum: float = 0.1, eps: float = 1e-5) -> Tensor:
    """
    Batch norm sobre NCHW.

    Em treino usa estatísticas do lote e, se `update_stats`, atualiza as
    médias móveis in-place (variância não enviesada). Em avaliação usa as
    médias móveis e é determinística.
    """
    if x.ndim != 4 or gamma.shape != (x.shape[1],):
        raise ShapeError("batch_norm2d", f"entrada {x.shape} com gamma {gamma.shape}")
    axes = (0, 2, 3)
    g_shape = (1, -1, 1, 1)
    if training:
        mu = x.data.mean(axis=axes, keepdims=True)
        var = x.data.var(axis=axes, keepdims=True)
        if update_stats:
            n = x.data.size // x.shape[1]
            unbiased = var.reshape(-1) * (n / max(n - 1, 1))
            running_mean *= (1.0 - momentum)
            running_mean += momentum * mu.reshape(-1)
            running_var *= (1.0 - momentum)
            running_var += momentum * unbiased
    else:
        mu = running_mean.reshape(g_shape)
        var = running_var.reshape(g_shape)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv
    out = xhat * gamma.data.reshape(g_shape) + beta.data.reshape(g_shape)

    def backward(g):
        dxhat = g * gamma.data.reshape(g_shape)
        if training:
            n = x.data.size // x.shape[1]
            dx = inv / n * (
                n * dxhat
                - dxhat.sum(axis=axes, keepdims=True)
                - xhat * (dxhat * xhat).sum(axis=axes, keepdims=True)
            )
        else:
            dx = dxhat * inv
        return dx, (g * xhat).sum(axis=axes), g.sum(axis=axes)

    return make_result(out.astype(x.dtype), (x, gamma, beta), backward, "batch_norm2d")


# ---------------------------------------------------------------------------
# Convolução e pooling
# ---------------------------------------------------------------------------

def conv2d(x: Tensor, weight: Tensor, bias: Optional[Tensor] = None,
           stride: int = 1, padding: int = 0) -> Tensor:
    """Convolução NCHW com kernel OIHW via im2col."""
    if x.ndim != 4 or weight.ndim != 4:
        raise ShapeError("conv2d", f"esperado NCHW/OIHW, recebido {x.shape} e {weight.shape}")
    n, c, h, w = x.shape
    o, c_w, kh, kw = weight.shape
    if c != c_w:
        raise ShapeError("conv2d", f"canais de entrada {c} != kernel {c_w}")
    if bias is not None and bias.shape != (o,):
        raise ShapeError("conv2d", f"bias {bias.shape} != ({o},)")
    p, s = padding, stride
    h_out = (h + 2 * p - kh) // s + 1
    w_out = (w + 2 * p - kw) // s + 1
    if h_out <= 0 or w_out <= 0:
        raise ShapeError("conv2d", f"kernel {kh}x{kw} maior que a entrada {h}x{w}")

    padded = np.pad(x.data, ((0, 0), (0, 0), (p, p), (p, p)))
    windows = sliding_window_view(padded, (kh, kw), axis=(2, 3))[:, :, ::s, ::s]
    cols = windows.transpose(0, 2, 3, 1, 4, 5).reshape(n * h_out * w_out, c * kh * kw)
    w_mat = weight.data.reshape(o, -1)
    out = (cols @ w_mat.T).reshape(n, h_out, w_out, o).transpose(0, 3, 1, 2)
    if bias is not None:
        out = out + bias.data.reshape(1, -1, 1, 1)
    parents = (x, weight) if bias is None else (x, weight, bias)

    def backward(g):
        g_rows = g.transpose(0, 2, 3, 1).reshape(-1, o)
        grad_w = (g_rows.T @ cols).reshape(weight.shape)
        d_cols = (g_rows @ w_mat).reshape(n, h_out, w_out, c, kh, kw)
        grad_padded = np.zeros_like(padded)
        for i in range(kh):
            for j in range(kw):
                grad_padded[:, :, i:i + s * h_out:s, j:j + s * w_out:s] += (
                    d_cols[:, :, :, :, i, j].transpose(0, 3, 1, 2)
                )
        grad_x = grad_padded[:, :, p:p + h, p:p + w]
        grads = [grad_x, grad_w]
        if bias is not None:
            grads.append(g_rows.sum(axis=0))
        return tuple(grads)

    return make_result(np.ascontiguousarray(out, dtype=x.dtype), parents, backward, "conv2d")


def avgpool(x: Tensor, kernel: Optional[int] = None) -> Tensor:
    """Média em janelas `kernel`x`kernel` sem sobreposição; global se `kernel` é None."""
    if x.ndim != 4:
        raise ShapeError("avgpool", f"esperado NCHW, recebido {x.shape}")
    n, c, h, w = x.shape
    if kernel is None:
        out = x.data.mean(axis=(2, 3))

        def backward(g):
            return (np.broadcast_to(g[:, :, None, None] / (h * w), x.shape).copy(),)

        return make_result(out, (x,), backward, "avgpool")

    if h % kernel or w % kernel:
        raise ShapeError("avgpool", f"{h}x{w} não divisível por {kernel}")
    blocks = x.data.reshape(n, c, h // kernel, kernel, w // kernel, kernel)
    out = blocks.mean(axis=(3, 5))

    def backward(g):
        expanded = np.repeat(np.repeat(g, kernel, axis=2), kernel, axis=3)
        return (expanded / (kernel * kernel),)

    return make_result(out, (x,), backward, "avgpool")
