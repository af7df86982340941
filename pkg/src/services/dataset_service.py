"""Serviço de construção do split long-tailed."""

import logging
from pathlib import Path
from typing import Optional, Tuple

from ..config.config_manager import TrainConfig
from ..data.longtail import make_longtailed
from ..models.dataset import LTDataset, RawDataset
from ..parsers.cifar_parser import load_cifar10
from ..utils.logger import LogContext, log_dataset_built
from ..utils.seeding import SeedBundle
from .report_service import ReportService, file_digest

logger = logging.getLogger("deit_lt.dataset")


class DatasetService:
    """Lê o CIFAR-10 binário e decima o treino para o fator de desbalanceamento configurado."""

    def __init__(self, config: TrainConfig, seeds: SeedBundle, reports: Optional[ReportService] = None):
        self.config = config
        self.seeds = seeds
        self.reports = reports
        self._raw: Optional[RawDataset] = None

    def load_raw(self, data_dir: Optional[Path] = None) -> RawDataset:
        if self._raw is None:
            self._raw = load_cifar10(data_dir or self.config.data_dir)
        return self._raw

    def build(self, raw: Optional[RawDataset] = None) -> LTDataset:
        settings = self.config.dataset
        raw = raw or self.load_raw()
        with LogContext(logger, "Construção do split", f"rho={settings.rho:g}"):
            dataset = make_longtailed(
                raw,
                rho=settings.rho,
                n_max=settings.n_max,
                seed=self.seeds.split,
                dataset_kind=settings.kind,
                thresholds=(settings.head_threshold, settings.tail_threshold),
            )
        log_dataset_built(logger, dataset.rho, dataset.size,
                          int(dataset.class_counts.max()), int(dataset.class_counts.min()))
        return dataset

    def build_with_manifest(self, raw: Optional[RawDataset] = None) -> Tuple[LTDataset, Optional[str]]:
        """Constrói o split e, com relatórios, grava o CSV e devolve seu SHA-256."""
        dataset = self.build(raw)
        if self.reports is None:
            return dataset, None
        path = self.reports.write_split_manifest(dataset)
        digest = file_digest(path)
        if self.reports.manifest is not None:
            self.reports.manifest.dataset_digest = digest
        return dataset, digest
