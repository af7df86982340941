"""Serviço que executa os diagnósticos sobre checkpoints treinados."""

import logging
from pathlib import Path
from typing import List, Optional

import numpy as np

from ..config.config_manager import TrainConfig
from ..data.augment import StrongAugmentRecipe
from ..data.longtail import to_input
from ..diagnostics.divergence import cls_dist_divergence
from ..diagnostics.entropy import entropy_report
from ..diagnostics.locality import mean_attention_distance
from ..diagnostics.rank import feature_rank
from ..diagnostics.rollout import attention_rollout
from ..exceptions import ParameterError
from ..models.dataset import ClassGroup, LTDataset
from ..models.diagnostics import (
    DivergenceResult,
    EntropySummary,
    FeatureMatrix,
    FeatureRankResult,
    LocalityProfile,
    TokenKind,
)
from ..networks.resnet import TeacherCNN
from ..networks.vit import DualTokenViT, vit_forward
from ..tensor import no_grad
from ..utils.logger import LogContext
from ..utils.seeding import SeedBundle
from .evaluation_service import collect_outputs
from .report_service import ReportService

logger = logging.getLogger("deit_lt.diagnostics")

MODES = ("locality", "rollout", "rank", "entropy", "divergence")


class DiagnosticsService:
    """Roda cada modo do `diagnose` sobre imagens do split de validação."""

    def __init__(self, config: TrainConfig, dataset: LTDataset, seeds: SeedBundle, reports: ReportService):
        self.config = config
        self.dataset = dataset
        self.seeds = seeds
        self.reports = reports

    @property
    def settings(self):
        return self.config.diagnostics

    def _validation_inputs(self, n: Optional[int] = None):
        n = min(n or self.settings.n_samples, len(self.dataset.val_labels))
        images = self.dataset.val_images[:n]
        return to_input(images, self.dataset.mean, self.dataset.std), self.dataset.val_labels[:n]

    def locality(self, student: DualTokenViT) -> LocalityProfile:
        """Distância média por bloco e cabeça, média ponderada pelos lotes."""
        inputs, _ = self._validation_inputs()
        student.eval()
        total, count = None, 0
        with LogContext(logger, "Diagnóstico de localidade", f"{len(inputs)} imagens"), no_grad():
            for start in range(0, len(inputs), self.settings.batch_size):
                chunk = inputs[start:start + self.settings.batch_size]
                out = vit_forward(student, chunk, capture_attention=True)
                profile = mean_attention_distance(out.attention, student.patch_size, student.image_size)
                weighted = profile.distances * len(chunk)
                total = weighted if total is None else total + weighted
                count += len(chunk)
        result = LocalityProfile(
            distances=total / max(count, 1) if total is not None else np.zeros((0, 0)),
            patch_size=student.patch_size,
            image_size=student.image_size,
            n_images=count,
        )
        self.reports.write_locality(result)
        return result

    def rollout(self, student: DualTokenViT) -> List[Path]:
        """Um mapa PGM por imagem, com a saliência do token alvo sobre os patches."""
        inputs, _ = self._validation_inputs(self.settings.rollout_images)
        student.eval()
        with LogContext(logger, "Attention rollout", f"alvo {self.settings.rollout_target}"), no_grad():
            out = vit_forward(student, inputs, capture_attention=True)
            result = attention_rollout(out.attention, self.settings.rollout_target)
        return [
            self.reports.write_pgm(saliency, f"rollout/rollout_{i:03d}.pgm")
            for i, saliency in enumerate(result.saliency)
        ]

    def rank(self, student: DualTokenViT) -> List[FeatureRankResult]:
        """
        Rank das features de cauda por bloco e no fim do tronco, para cada
        token. F_all usa toda a validação e F_min todas as imagens de
        validação das classes Tail, sem o corte de `n_samples`.
        """
        inputs, labels = self._validation_inputs(len(self.dataset.val_labels))
        tail_classes = self.dataset.classes_in(ClassGroup.TAIL)
        if not tail_classes:
            raise ParameterError("dataset", "nenhuma classe Tail para o diagnóstico de rank")

        student.eval()
        per_block = [([], []) for _ in range(student.depth)]
        with no_grad():
            for start in range(0, len(inputs), self.settings.batch_size):
                out = vit_forward(student, inputs[start:start + self.settings.batch_size], capture_features=True)
                for b, (cls_rows, dist_rows) in enumerate(out.block_features):
                    per_block[b][0].append(cls_rows)
                    per_block[b][1].append(dist_rows)
        final = collect_outputs(student, inputs, self.settings.batch_size)

        kinds = [TokenKind.CLS] + ([TokenKind.DIST] if student.has_dist_token else [])
        sources = [(b, np.concatenate(cls), np.concatenate(dist)) for b, (cls, dist) in enumerate(per_block)]
        sources.append((None, final.features_cls, final.features_dist))

        results = []
        with LogContext(logger, "Diagnóstico de rank", f"tol={self.settings.rank_tol}"):
            for block, cls_rows, dist_rows in sources:
                for kind in kinds:
                    rows = cls_rows if kind == TokenKind.CLS else dist_rows
                    f_all = FeatureMatrix(rows, labels, kind, block)
                    results.append(feature_rank(f_all, f_all.select_classes(tail_classes), self.settings.rank_tol))
        self.reports.write_rank(results)
        return results

    def entropy(self, teacher: TeacherCNN) -> EntropySummary:
        augmentation = self.config.augmentation
        with LogContext(logger, "Entropia do professor", f"{self.settings.n_samples} imagens"):
            summary = entropy_report(
                teacher, self.dataset, StrongAugmentRecipe.from_settings(augmentation),
                n_samples=self.settings.n_samples, seed=self.seeds.augment,
                mixup_alpha=augmentation.mixup_alpha, cutmix_alpha=augmentation.cutmix_alpha,
                switch_prob=augmentation.switch_prob, batch_size=self.settings.batch_size,
            )
        self.reports.write_entropy(summary)
        return summary

    def divergence(self, student: DualTokenViT) -> DivergenceResult:
        inputs, _ = self._validation_inputs()
        outputs = collect_outputs(student, inputs, self.settings.batch_size)
        result = cls_dist_divergence(outputs.features_cls, outputs.features_dist)
        if result.excluded:
            logger.warning(f"{result.excluded} linhas de norma zero excluídas da divergência")
        self.reports.write_divergence(result)
        return result
