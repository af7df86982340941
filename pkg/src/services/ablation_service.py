"""Grade de ablação: destilação OOD x DRW x professor com SAM, opcionalmente em várias sementes."""

import copy
import itertools
import logging
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import pandas as pd

from ..config.config_manager import TrainConfig
from ..exceptions import ParameterError
from ..models.dataset import LTDataset
from ..networks.resnet import TeacherCNN
from ..utils.logger import LogContext
from ..utils.seeding import SeedBundle, derive_seeds
from .report_service import ABLATION_KEYS, ABLATION_METRICS, ReportService
from .training_service import EpochCallback, TrainingService

logger = logging.getLogger("deit_lt.ablation")

TOGGLES = (True, False)


def ablation_tag(ood_distill: bool, drw: bool, sam_teacher: bool) -> str:
    def flag(name, value):
        return f"{name}-{'on' if value else 'off'}"
    return "_".join([flag("ood", ood_distill), flag("drw", drw), flag("sam", sam_teacher)])


def validate_seed_list(seeds: Sequence[int]) -> List[int]:
    values = [int(s) for s in seeds]
    if not values:
        raise ParameterError("seeds", "lista de sementes vazia")
    if any(s < 0 for s in values):
        raise ParameterError("seeds", "sementes devem ser não negativas")
    if len(set(values)) != len(values):
        raise ParameterError("seeds", f"sementes repetidas: {values}")
    return values


def summarize_seeds(rows: List[Dict[str, Any]]) -> List[Dict[str, Any]]:
    """
    Agrupa as linhas por braço e devolve média e erro padrão de cada
    métrica. Com uma única semente o erro padrão é NaN.
    """
    frame = pd.DataFrame(rows, columns=["seed"] + ABLATION_KEYS + ABLATION_METRICS)
    grouped = frame.groupby(ABLATION_KEYS, sort=False)
    summary = grouped[ABLATION_METRICS].agg(["mean", "sem"])
    summary.columns = [f"{metric}_{'stderr' if stat == 'sem' else stat}" for metric, stat in summary.columns]
    summary.insert(0, "n_seeds", grouped["seed"].nunique())
    return summary.reset_index().to_dict("records")


class AblationService:
    """Treina os dois professores e os oito estudantes, em sequência, para cada semente."""

    def __init__(self, config: TrainConfig, dataset: LTDataset, seeds: SeedBundle,
                 reports: ReportService, on_epoch: Optional[EpochCallback] = None):
        self.config = config
        self.dataset = dataset
        self.seeds = seeds
        self.reports = reports
        self.on_epoch = on_epoch

    def _variant(self, ood_distill: bool, drw: bool, sam_teacher: bool) -> TrainConfig:
        variant = copy.deepcopy(self.config)
        variant.student.regime = "deit_lt"
        variant.ablation.ood_distill = ood_distill
        variant.ablation.drw = drw
        variant.ablation.sam_teacher = sam_teacher
        return variant

    def _reports_for(self, base: Path, tag: str) -> ReportService:
        return ReportService(base / tag, self.reports.manifest)

    def _grid(self, seeds: SeedBundle, base: Path) -> List[Dict[str, Any]]:
        teachers: Dict[bool, TeacherCNN] = {}
        for sam_teacher in TOGGLES:
            tag = f"teacher_sam-{'on' if sam_teacher else 'off'}"
            service = TrainingService(self._variant(True, True, sam_teacher), self.dataset, seeds,
                                      self._reports_for(base, tag), self.on_epoch)
            teachers[sam_teacher] = service.train_teacher().model

        rows = []
        for sam_teacher, ood_distill, drw in itertools.product(TOGGLES, TOGGLES, TOGGLES):
            tag = ablation_tag(ood_distill, drw, sam_teacher)
            with LogContext(logger, "Braço da ablação", f"{tag} (semente {seeds.master})"):
                service = TrainingService(self._variant(ood_distill, drw, sam_teacher), self.dataset,
                                          seeds, self._reports_for(base, tag), self.on_epoch)
                run = service.train_student(teachers[sam_teacher])
            final = run.metrics.evaluations[-1] if run.metrics.evaluations else None
            rows.append({
                "seed": seeds.master,
                "ood_distill": ood_distill,
                "drw": drw,
                "sam_teacher": sam_teacher,
                "acc_avg": final.averaged.overall if final else float("nan"),
                "acc_cls": final.cls_only.overall if final else float("nan"),
                "acc_dist": final.dist_only.overall if final else float("nan"),
                "head": final.averaged.head if final else float("nan"),
                "mid": final.averaged.mid if final else float("nan"),
                "tail": final.averaged.tail if final else float("nan"),
            })
        return rows

    def run(self) -> List[Dict[str, Any]]:
        """Grade única com a semente mestra; artefatos em `ablation/<braço>`."""
        rows = self._grid(self.seeds, self.reports.output_dir / "ablation")
        self.reports.write_ablation(rows)
        return rows

    def run_seeds(self, seeds: Sequence[int]) -> List[Dict[str, Any]]:
        """
        Repete a grade para cada semente (inicialização, aumento e ordem dos
        lotes); o split LT é o da semente mestra e fica fixo. Grava as linhas
        por semente em `ablation.csv` e média/erro padrão em
        `ablation_summary.csv`. Artefatos em `ablation/seed-<s>/<braço>`.
        """
        values = validate_seed_list(seeds)
        rows: List[Dict[str, Any]] = []
        for seed in values:
            with LogContext(logger, "Grade de ablação", f"semente {seed}"):
                rows.extend(self._grid(derive_seeds(seed), self.reports.output_dir / "ablation" / f"seed-{seed}"))
        self.reports.write_ablation(rows)
        summary = summarize_seeds(rows)
        self.reports.write_seed_summary(summary)
        return summary
