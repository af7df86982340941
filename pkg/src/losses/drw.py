"""Re-ponderação adiada pelo número efetivo de amostras."""

from dataclasses import dataclass, field

import numpy as np

from ..exceptions import ParameterError
from ..utils.validators import require_nonnegative, require_open_unit


def effective_number(n, beta: float):
    """e = (1 - beta^n) / (1 - beta)."""
    require_open_unit("beta", beta)
    n = require_nonnegative("n", n).astype(np.float64)
    value = -np.expm1(n * np.log(beta)) / (1.0 - beta)
    return float(value) if value.ndim == 0 else value


@dataclass(eq=False)
class DRWSchedule:
    """Pesos 1/e_y ativados a partir da época `start_epoch`."""
    beta: float
    start_epoch: int
    class_counts: np.ndarray
    normalize: bool = False
    enabled: bool = True
    _active: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        require_open_unit("beta", self.beta)
        counts = np.asarray(self.class_counts)
        if (counts <= 0).any():
            raise ParameterError("class_counts", "contagens de classe devem ser positivas")
        weights = 1.0 / effective_number(counts, self.beta)
        if self.normalize:
            weights = weights * len(weights) / weights.sum()
        self._active = np.asarray(weights, dtype=np.float64)

    @property
    def num_classes(self) -> int:
        return len(self._active)

    def is_active(self, epoch: int) -> bool:
        return self.enabled and epoch >= self.start_epoch

    def weights(self, epoch: int) -> np.ndarray:
        if epoch < 0:
            raise ParameterError("epoch", f"{epoch} negativa")
        if not self.is_active(epoch):
            return np.ones(self.num_classes, dtype=np.float64)
        return self._active.copy()


def drw_weights(schedule: DRWSchedule, epoch: int) -> np.ndarray:
    return schedule.weights(epoch)
