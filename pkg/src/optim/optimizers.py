"""Otimizadores sobre parâmetros numpy: SGD com momento e AdamW."""

from typing import Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from ..exceptions import CheckpointError
from ..networks.module import Parameter

# Tokens e embeddings posicionais ficam fora do weight decay
NO_DECAY_NAMES = ("cls_token", "dist_token", "pos_embed")


def decay_mask(named_params: Sequence[Tuple[str, Parameter]]) -> List[bool]:
    """True para pesos de matriz/kernel; False para vetores, bias, normas e tokens."""
    return [
        p.ndim > 1 and not name.split(".")[-1] in NO_DECAY_NAMES
        for name, p in named_params
    ]


def adamw_step(params: Sequence[np.ndarray], grads: Sequence[Optional[np.ndarray]], state: Dict,
               lr: float, betas: Tuple[float, float] = (0.9, 0.999), weight_decay: float = 0.0,
               eps: float = 1e-8, decay: Optional[Sequence[bool]] = None):
    """
    Um passo AdamW in-place.

    `state` guarda "step", "m" e "v" (listas alinhadas a `params`) e é
    inicializado na primeira chamada. Parâmetros sem gradiente não mudam.
    """
    beta1, beta2 = betas
    if "step" not in state:
        state["step"] = 0
        state["m"] = [np.zeros_like(p) for p in params]
        state["v"] = [np.zeros_like(p) for p in params]
    state["step"] += 1
    t = state["step"]
    bias1 = 1.0 - beta1 ** t
    bias2 = 1.0 - beta2 ** t

    for i, (p, g) in enumerate(zip(params, grads)):
        if g is None:
            continue
        if weight_decay and (decay is None or decay[i]):
            p *= (1.0 - lr * weight_decay)
        m, v = state["m"][i], state["v"][i]
        m *= beta1
        m += (1.0 - beta1) * g
        v *= beta2
        v += (1.0 - beta2) * g * g
        p -= lr * (m / bias1) / (np.sqrt(v / bias2) + eps)


class Optimizer:
    """Base: lista de parâmetros, taxa corrente e estado serializável."""

    state_keys: Tuple[str, ...] = ()

    def __init__(self, params: Sequence[Parameter], lr: float, decay: Optional[Sequence[bool]] = None):
        self.params = list(params)
        self.lr = lr
        self.decay = list(decay) if decay is not None else [True] * len(self.params)
        self.state: Dict = {}

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        raise NotImplementedError

    def state_entries(self, prefix: str = "optim.") -> Dict[str, np.ndarray]:
        entries = {f"{prefix}step": np.array([self.state.get("step", 0)], dtype=np.float64)}
        for key in self.state_keys:
            for i, value in enumerate(self.state.get(key, [])):
                entries[f"{prefix}{key}.{i}"] = value.copy()
        return entries

    def load_state_entries(self, entries: Mapping[str, np.ndarray], prefix: str = "optim.",
                           source: str = "<estado>"):
        if f"{prefix}step" not in entries:
            raise CheckpointError(source, "estado do otimizador ausente")
        step = int(entries[f"{prefix}step"][0])
        state: Dict = {"step": step}
        if step > 0:
            for key in self.state_keys:
                values = []
                for i, p in enumerate(self.params):
                    name = f"{prefix}{key}.{i}"
                    if name not in entries or entries[name].shape != p.shape:
                        raise CheckpointError(source, f"estado '{name}' ausente ou com shape inválido")
                    values.append(np.array(entries[name], dtype=p.dtype))
                state[key] = values
        else:
            state = {}
        self.state = state


class AdamW(Optimizer):
    state_keys = ("m", "v")

    def __init__(self, params: Sequence[Parameter], lr: float = 5e-4,
                 betas: Tuple[float, float] = (0.9, 0.999), eps: float = 1e-8,
                 weight_decay: float = 0.05, decay: Optional[Sequence[bool]] = None):
        super().__init__(params, lr, decay)
        self.betas = tuple(betas)
        self.eps = eps
        self.weight_decay = weight_decay

    def step(self):
        adamw_step(
            [p.data for p in self.params], [p.grad for p in self.params], self.state,
            lr=self.lr, betas=self.betas, weight_decay=self.weight_decay, eps=self.eps,
            decay=self.decay,
        )


class SGD(Optimizer):
    """SGD com momento e weight decay acoplado ao gradiente."""

    state_keys = ("momentum_buffer",)

    def __init__(self, params: Sequence[Parameter], lr: float = 0.1, momentum: float = 0.9,
                 weight_decay: float = 2e-4, decay: Optional[Sequence[bool]] = None):
        super().__init__(params, lr, decay)
        self.momentum = momentum
        self.weight_decay = weight_decay

    def step(self):
        if "step" not in self.state:
            self.state["step"] = 0
            self.state["momentum_buffer"] = [np.zeros_like(p.data) for p in self.params]
        first = self.state["step"] == 0
        self.state["step"] += 1
        for i, p in enumerate(self.params):
            if p.grad is None:
                continue
            g = p.grad
            if self.weight_decay and self.decay[i]:
                g = g + self.weight_decay * p.data
            buf = self.state["momentum_buffer"][i]
            if first:
                buf[...] = g
            else:
                buf *= self.momentum
                buf += g
            p.data -= self.lr * buf
