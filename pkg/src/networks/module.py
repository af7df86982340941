"""Base de módulos: registro de parâmetros, buffers e estado serializável."""

from contextlib import contextmanager
from typing import Dict, Iterator, List, Mapping, Tuple

import numpy as np

from ..exceptions import CheckpointError
from ..tensor import Tensor


class Parameter(Tensor):
    """Tensor treinável registrado automaticamente pelo módulo dono."""

    def __init__(self, data, name=None):
        super().__init__(np.asarray(data, dtype=np.float32), requires_grad=True, name=name)


class Module:
    """
    Contêiner de parâmetros no estilo árvore.

    Atributos do tipo Parameter e Module são registrados na ordem de
    atribuição; buffers (estatísticas de batch norm) via `register_buffer`.
    """

    def __init__(self):
        object.__setattr__(self, "_params", {})
        object.__setattr__(self, "_children", {})
        object.__setattr__(self, "_buffers", {})
        object.__setattr__(self, "training", True)
        object.__setattr__(self, "stats_frozen", False)

    def __setattr__(self, name, value):
        if isinstance(value, Parameter):
            self._params[name] = value
        elif isinstance(value, Module):
            self._children[name] = value
        object.__setattr__(self, name, value)

    def register_buffer(self, name: str, value: np.ndarray):
        self._buffers[name] = value
        object.__setattr__(self, name, value)

    def __call__(self, *args, **kwargs):
        return self.forward(*args, **kwargs)

    def forward(self, *args, **kwargs):
        raise NotImplementedError

    def children(self) -> Iterator[Tuple[str, "Module"]]:
        return iter(self._children.items())

    def modules(self) -> Iterator["Module"]:
        yield self
        for _, child in self._children.items():
            yield from child.modules()

    def named_parameters(self, prefix: str = "") -> Iterator[Tuple[str, Parameter]]:
        for name, param in self._params.items():
            yield f"{prefix}{name}", param
        for name, child in self._children.items():
            yield from child.named_parameters(f"{prefix}{name}.")

    def parameters(self) -> List[Parameter]:
        return [p for _, p in self.named_parameters()]

    def named_buffers(self, prefix: str = "") -> Iterator[Tuple[str, np.ndarray]]:
        for name, buffer in self._buffers.items():
            yield f"{prefix}{name}", buffer
        for name, child in self._children.items():
            yield from child.named_buffers(f"{prefix}{name}.")

    def num_parameters(self) -> int:
        return int(sum(p.size for p in self.parameters()))

    def zero_grad(self):
        for p in self.parameters():
            p.grad = None

    def astype(self, dtype) -> "Module":
        """Converte parâmetros e buffers (float64 para checagens numéricas)."""
        for p in self.parameters():
            p.data = p.data.astype(dtype)
        for module in self.modules():
            for name, buffer in list(module._buffers.items()):
                module.register_buffer(name, buffer.astype(dtype))
        return self

    def train(self, mode: bool = True) -> "Module":
        for module in self.modules():
            object.__setattr__(module, "training", mode)
        return self

    def eval(self) -> "Module":
        return self.train(False)

    @contextmanager
    def frozen_running_stats(self):
        """Batch norm segue em modo de treino mas sem atualizar médias móveis."""
        previous = [(m, m.stats_frozen) for m in self.modules()]
        for module, _ in previous:
            object.__setattr__(module, "stats_frozen", True)
        try:
            yield self
        finally:
            for module, flag in previous:
                object.__setattr__(module, "stats_frozen", flag)

    def state_dict(self, prefix: str = "") -> Dict[str, np.ndarray]:
        state = {name: p.data.copy() for name, p in self.named_parameters(prefix)}
        state.update({name: b.copy() for name, b in self.named_buffers(prefix)})
        return state

    def load_state_dict(self, state: Mapping[str, np.ndarray], prefix: str = "", source: str = "<estado>"):
        """Copia valores in-place; chaves ausentes ou shapes divergentes são erro."""
        targets: Dict[str, np.ndarray] = {name: p.data for name, p in self.named_parameters(prefix)}
        targets.update(dict(self.named_buffers(prefix)))
        missing = [name for name in targets if name not in state]
        if missing:
            raise CheckpointError(source, f"entradas ausentes: {', '.join(missing[:5])}")
        for name, target in targets.items():
            value = np.asarray(state[name])
            if value.shape != target.shape:
                raise CheckpointError(source, f"'{name}' tem shape {value.shape}, esperado {target.shape}")
            target[...] = value


class ModuleList(Module):
    """Sequência indexável de submódulos."""

    def __init__(self, modules=()):
        super().__init__()
        object.__setattr__(self, "_items", [])
        for module in modules:
            self.append(module)

    def append(self, module: Module):
        self._children[str(len(self._items))] = module
        self._items.append(module)

    def __iter__(self):
        return iter(self._items)

    def __len__(self) -> int:
        return len(self._items)

    def __getitem__(self, index: int) -> Module:
        return self._items[index]
