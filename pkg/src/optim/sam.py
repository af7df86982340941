"""Sharpness-Aware Minimization como invólucro de um otimizador interno."""

import logging
from typing import Callable, Optional

import numpy as np

from ..networks.module import Module
from ..tensor import Tensor
from ..utils.validators import require_at_least
from .optimizers import Optimizer

logger = logging.getLogger("deit_lt.optim")

LossClosure = Callable[[], Tensor]


class SAM:
    """
    Passo em dois tempos: gradiente em w, subida até w + rho*g/||g||,
    gradiente no ponto perturbado, restauração de w e passo do otimizador
    interno com o gradiente perturbado.

    A norma é a L2 global sobre todos os parâmetros. Com `module`, o
    segundo forward não atualiza médias móveis de batch norm.
    """

    def __init__(self, base_optimizer: Optimizer, rho: float = 0.05, module: Optional[Module] = None):
        require_at_least("rho_sam", rho, 0.0)
        self.base_optimizer = base_optimizer
        self.rho = rho
        self.module = module
        self.last_perturbation_norm = 0.0

    @property
    def params(self):
        return self.base_optimizer.params

    @property
    def lr(self) -> float:
        return self.base_optimizer.lr

    @lr.setter
    def lr(self, value: float):
        self.base_optimizer.lr = value

    def _evaluate(self, closure: LossClosure) -> float:
        self.base_optimizer.zero_grad()
        loss = closure()
        loss.backward()
        return loss.item()

    def grad_norm(self) -> float:
        total = 0.0
        for p in self.params:
            if p.grad is not None:
                total += float(np.sum(p.grad.astype(np.float64) ** 2))
        return float(np.sqrt(total))

    def step(self, closure: LossClosure) -> float:
        """Executa o passo completo; devolve a perda no ponto original."""
        loss = self._evaluate(closure)
        norm = self.grad_norm()
        self.last_perturbation_norm = 0.0
        if self.rho == 0.0 or norm == 0.0:
            if norm == 0.0:
                logger.debug("Gradiente nulo: passo SAM sem perturbação")
            self.base_optimizer.step()
            return loss

        originals = []
        squared = 0.0
        for p in self.params:
            originals.append(p.data.copy())
            if p.grad is None:
                continue
            e = (self.rho / norm) * p.grad.astype(np.float64)
            squared += float(np.sum(e * e))
            p.data += e.astype(p.dtype)
        self.last_perturbation_norm = float(np.sqrt(squared))

        if self.module is not None:
            with self.module.frozen_running_stats():
                self._evaluate(closure)
        else:
            self._evaluate(closure)

        for p, original in zip(self.params, originals):
            p.data[...] = original
        self.base_optimizer.step()
        return loss

    def state_entries(self, prefix: str = "optim."):
        return self.base_optimizer.state_entries(prefix)

    def load_state_entries(self, entries, prefix: str = "optim.", source: str = "<estado>"):
        self.base_optimizer.load_state_entries(entries, prefix, source)


def sam_step(model: Module, batch_loss_fn: LossClosure, rho_sam: float, inner_optimizer: Optimizer) -> float:
    """Um passo SAM sobre todos os parâmetros de `model`."""
    return SAM(inner_optimizer, rho_sam, module=model).step(batch_loss_fn)
