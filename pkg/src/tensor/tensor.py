"""Tensor denso com diferenciação automática em modo reverso."""

import threading
from contextlib import contextmanager
from typing import Callable, List, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import ShapeError

BackwardFn = Callable[[np.ndarray], Sequence[Optional[np.ndarray]]]

_grad_state = threading.local()


def is_grad_enabled() -> bool:
    """Indica se operações novas devem ser registradas para o backward."""
    return getattr(_grad_state, "enabled", True)


@contextmanager
def no_grad():
    """Desabilita o registro de operações na thread atual."""
    previous = is_grad_enabled()
    _grad_state.enabled = False
    try:
        yield
    finally:
        _grad_state.enabled = previous


class Tensor:
    """
    Array n-dimensional de ponto flutuante que participa da fita de gradientes.

    O array é guardado em `data` (float32 no treino, float64 nos diagnósticos).
    Tensores com `requires_grad` recebem `grad` com o mesmo shape após
    `backward()`.
    """

    def __init__(self, data, requires_grad: bool = False, dtype=None, name: Optional[str] = None):
        array = np.asarray(data, dtype=dtype)
        if array.dtype != np.float32 and array.dtype != np.float64:
            array = array.astype(np.float32)
        self.data: np.ndarray = array
        self.requires_grad = requires_grad
        self.grad: Optional[np.ndarray] = None
        self.name = name
        self._parents: Tuple["Tensor", ...] = ()
        self._backward: Optional[BackwardFn] = None
        self._op = ""

    @property
    def shape(self) -> Tuple[int, ...]:
        return self.data.shape

    @property
    def ndim(self) -> int:
        return self.data.ndim

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self) -> int:
        return self.data.size

    def numpy(self) -> np.ndarray:
        return self.data

    def item(self) -> float:
        return float(self.data.reshape(-1)[0]) if self.data.size == 1 else float("nan")

    def detach(self) -> "Tensor":
        return Tensor(self.data, requires_grad=False)

    def zero_grad(self):
        self.grad = None

    def backward(self, grad: Optional[np.ndarray] = None):
        """Propaga gradientes a partir deste tensor e limpa a fita."""
        if not self.requires_grad:
            return
        if grad is None:
            if self.data.size != 1:
                raise ShapeError("backward", f"gradiente inicial obrigatório para shape {self.shape}")
            grad = np.ones_like(self.data)
        elif np.shape(grad) != self.shape:
            raise ShapeError("backward", f"gradiente {np.shape(grad)} != tensor {self.shape}")

        tape = GradTape.record(self)
        tape.replay(np.asarray(grad, dtype=self.dtype))
        tape.clear()

    # Operadores delegam para src.tensor.ops
    def __add__(self, other):
        from . import ops
        return ops.add(self, other)

    def __radd__(self, other):
        from . import ops
        return ops.add(other, self)

    def __sub__(self, other):
        from . import ops
        return ops.sub(self, other)

    def __rsub__(self, other):
        from . import ops
        return ops.sub(other, self)

    def __mul__(self, other):
        from . import ops
        return ops.mul(self, other)

    def __rmul__(self, other):
        from . import ops
        return ops.mul(other, self)

    def __truediv__(self, other):
        from . import ops
        return ops.div(self, other)

    def __neg__(self):
        from . import ops
        return ops.neg(self)

    def __matmul__(self, other):
        from . import ops
        return ops.matmul(self, other)

    def __getitem__(self, index):
        from . import ops
        return ops.getitem(self, index)

    def reshape(self, *shape):
        from . import ops
        if len(shape) == 1 and isinstance(shape[0], (tuple, list)):
            shape = tuple(shape[0])
        return ops.reshape(self, shape)

    def transpose(self, *axes):
        from . import ops
        if len(axes) == 1 and isinstance(axes[0], (tuple, list)):
            axes = tuple(axes[0])
        return ops.transpose(self, axes or None)

    def sum(self, axis=None, keepdims: bool = False):
        from . import ops
        return ops.sum(self, axis=axis, keepdims=keepdims)

    def mean(self, axis=None, keepdims: bool = False):
        from . import ops
        return ops.mean(self, axis=axis, keepdims=keepdims)

    def exp(self):
        from . import ops
        return ops.exp(self)

    def log(self):
        from . import ops
        return ops.log(self)

    def __repr__(self) -> str:
        grad_flag = ", requires_grad=True" if self.requires_grad else ""
        return f"Tensor(shape={self.shape}, dtype={self.dtype}{grad_flag})"


def make_result(data: np.ndarray, parents: Sequence[Tensor], backward: BackwardFn, op: str) -> Tensor:
    """Cria o tensor de saída de uma primitiva e o liga aos pais quando necessário."""
    out = Tensor(data)
    if is_grad_enabled() and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = tuple(parents)
        out._backward = backward
        out._op = op
    return out


class GradTape:
    """
    Registro ordenado das primitivas alcançáveis a partir de um tensor raiz.

    `entries` está em ordem topológica (pais antes dos filhos); o replay
    percorre a ordem inversa acumulando os produtos vetor-Jacobiano.
    """

    def __init__(self, entries: List[Tensor]):
        self.entries = entries

    @classmethod
    def record(cls, root: Tensor) -> "GradTape":
        order: List[Tensor] = []
        visited = set()
        stack = [(root, False)]
        # DFS iterativo; grafos de ViT passam do limite de recursão
        while stack:
            node, expanded = stack.pop()
            if expanded:
                order.append(node)
                continue
            if id(node) in visited:
                continue
            visited.add(id(node))
            stack.append((node, True))
            for parent in node._parents:
                if parent.requires_grad and id(parent) not in visited:
                    stack.append((parent, False))
        return cls(order)

    def replay(self, seed_grad: np.ndarray):
        root = self.entries[-1]
        root.grad = seed_grad if root.grad is None else root.grad + seed_grad
        for node in reversed(self.entries):
            if node._backward is None or node.grad is None:
                continue
            parent_grads = node._backward(node.grad)
            for parent, grad in zip(node._parents, parent_grads):
                if grad is None or not parent.requires_grad:
                    continue
                if grad.shape != parent.shape:
                    raise ShapeError(node._op, f"gradiente {grad.shape} != entrada {parent.shape}")
                grad = grad.astype(parent.dtype, copy=False)
                parent.grad = grad if parent.grad is None else parent.grad + grad

    def clear(self):
        for node in self.entries:
            node._parents = ()
            node._backward = None
        self.entries = []
