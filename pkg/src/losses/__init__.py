"""Funções de perda e re-ponderação."""

from .classification import (
    ce_soft,
    ce_smoothed,
    drw_distill_loss,
    deit_lt_loss_terms,
    combined_deit_lt_loss,
)
from .ldam import ldam_margins, ldam_loss
from .drw import effective_number, DRWSchedule, drw_weights

__all__ = [
    "ce_soft",
    "ce_smoothed",
    "drw_distill_loss",
    "deit_lt_loss_terms",
    "combined_deit_lt_loss",
    "ldam_margins",
    "ldam_loss",
    "effective_number",
    "DRWSchedule",
    "drw_weights",
]
