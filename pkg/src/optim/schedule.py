"""Agenda de taxa de aprendizado com aquecimento linear e decaimento de cosseno."""

import math

from ..exceptions import ParameterError


def cosine_lr(step: int, total_steps: int, warmup_steps: int, base_lr: float, min_lr: float = 0.0) -> float:
    if warmup_steps >= total_steps:
        raise ParameterError("warmup_steps", f"{warmup_steps} deve ser menor que total_steps={total_steps}")
    if step < warmup_steps:
        return base_lr * step / warmup_steps
    progress = min(1.0, (step - warmup_steps) / (total_steps - warmup_steps))
    return min_lr + 0.5 * (base_lr - min_lr) * (1.0 + math.cos(math.pi * progress))
