"""Serviço de treinamento: professor LDAM-DRW-SAM, estudante DeiT-LT e cRT."""

import logging
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, List, Optional, Union

import numpy as np

from ..config.config_manager import TrainConfig
from ..data.augment import StrongAugmentRecipe, strong_augment, weak_augment
from ..data.longtail import to_input
from ..data.mixing import mix_batch
from ..data.sampler import BatchLoader, ClassBalancedSampler
from ..exceptions import ConfigurationError, NumericError
from ..losses.classification import ce_smoothed, ce_soft, deit_lt_loss_terms
from ..losses.drw import DRWSchedule
from ..losses.ldam import ldam_loss
from ..models.dataset import AugmentedViews, LabeledBatch, LTDataset, RawBatch
from ..models.training_results import (
    EpochMetrics,
    EvaluationResult,
    LossBreakdown,
    RunMetrics,
    TeacherEpochMetrics,
)
from ..networks.predictions import hard_label
from ..networks.resnet import TeacherCNN, teacher_forward
from ..networks.vit import DualTokenViT, vit_forward
from ..optim.optimizers import SGD, AdamW, Optimizer, decay_mask
from ..optim.sam import SAM
from ..optim.schedule import cosine_lr
from ..tensor import Tensor, no_grad, ops
from ..utils.logger import LogContext, log_checkpoint_saved, log_epoch_summary
from ..utils.seeding import SeedBundle, batch_rng
from .evaluation_service import evaluate_student, evaluate_teacher
from .model_store import load_student, read_checkpoint, save_student, save_teacher
from .report_service import ReportService

logger = logging.getLogger("deit_lt.training")

REGIMES = ("deit_lt", "deit", "vit")

# Fluxos de inicialização derivados da semente `init`
TEACHER_STREAM = 1
STUDENT_STREAM = 2
CRT_STREAM = 3

EpochCallback = Callable[[str, int, int, object], None]


@dataclass
class DistillState:
    """O que um passo de destilação precisa além dos modelos."""
    optimizer: Optimizer
    drw: DRWSchedule
    mean: np.ndarray
    std: np.ndarray


@dataclass
class TrainingRun:
    """Resultado de um treino: modelo, métricas e checkpoint final."""
    model: Union[TeacherCNN, DualTokenViT]
    metrics: RunMetrics
    checkpoint: Path


def _check_finite(operation: str, value: float, epoch: int, batch_index: int):
    if not math.isfinite(value):
        raise NumericError(operation, f"perda não finita ({value}) na época {epoch + 1}, lote {batch_index}")


def build_teacher(config: TrainConfig, num_classes: int, seeds: SeedBundle) -> TeacherCNN:
    return TeacherCNN(
        num_classes,
        np.random.default_rng([seeds.init, TEACHER_STREAM]),
        blocks_per_stage=config.teacher_model.blocks_per_stage,
        widths=config.teacher_model.widths,
        logit_scale=config.ldam.scale,
    )


def build_student(config: TrainConfig, num_classes: int, seeds: SeedBundle) -> DualTokenViT:
    arch = config.student_model
    return DualTokenViT(
        num_classes,
        np.random.default_rng([seeds.init, STUDENT_STREAM]),
        image_size=arch.image_size,
        patch_size=arch.patch_size,
        embed_dim=arch.embed_dim,
        depth=arch.depth,
        n_heads=arch.n_heads,
        mlp_ratio=arch.mlp_ratio,
        dist_token=arch.dist_token and config.student.regime != "vit",
    )


def build_teacher_optimizer(config: TrainConfig, teacher: TeacherCNN) -> Union[Optimizer, SAM]:
    settings = config.teacher
    named = list(teacher.named_parameters())
    params = [p for _, p in named]
    decay = decay_mask(named)
    if settings.optimizer == "adamw":
        inner: Optimizer = AdamW(params, lr=settings.lr, weight_decay=settings.weight_decay, decay=decay)
    else:
        inner = SGD(params, lr=settings.lr, momentum=settings.momentum,
                    weight_decay=settings.weight_decay, decay=decay)
    if config.ablation.sam_teacher:
        return SAM(inner, rho=config.sam.rho, module=teacher)
    return inner


def build_student_optimizer(config: TrainConfig, student: DualTokenViT) -> AdamW:
    settings = config.student
    named = list(student.named_parameters())
    return AdamW(
        [p for _, p in named], lr=settings.lr, betas=tuple(settings.betas), eps=settings.eps,
        weight_decay=settings.weight_decay, decay=decay_mask(named),
    )


def student_drw_schedule(config: TrainConfig, class_counts: np.ndarray) -> DRWSchedule:
    """DRW do termo DIST; só o regime deit_lt com o toggle ligado o ativa."""
    return DRWSchedule(
        beta=config.drw.beta,
        start_epoch=config.student_drw_epoch,
        class_counts=class_counts,
        normalize=config.drw.normalize,
        enabled=config.student.regime == "deit_lt" and config.ablation.drw,
    )


def prepare_teacher_batch(raw_batch: RawBatch, mean: np.ndarray, std: np.ndarray) -> LabeledBatch:
    """Aumento fraco (recorte com padding e espelhamento) usado pelo professor e pelo cRT."""
    rng = batch_rng(*raw_batch.seed)
    weak = np.stack([weak_augment(image, rng) for image in raw_batch.images])
    return LabeledBatch(inputs=to_input(weak, mean, std), labels=raw_batch.labels)


def prepare_views(raw_batch: RawBatch, config: TrainConfig, epoch: int, num_classes: int,
                  mean: np.ndarray, std: np.ndarray, drw_epoch: int) -> AugmentedViews:
    """
    Vista forte + mistura para o estudante (e para o professor, com destilação OOD).

    Sem destilação OOD o professor recebe a vista fraca das mesmas imagens,
    sorteada depois da mistura para não alterar a vista do estudante.
    """
    rng = batch_rng(*raw_batch.seed)
    recipe = StrongAugmentRecipe.from_settings(config.augmentation)
    strong = np.stack([strong_augment(image, rng, recipe) for image in raw_batch.images])
    mixing = config.augmentation.mix_during_drw or epoch < drw_epoch
    student_batch = mix_batch(
        LabeledBatch(inputs=to_input(strong, mean, std), labels=raw_batch.labels),
        rng,
        num_classes,
        mixup_alpha=config.augmentation.mixup_alpha,
        cutmix_alpha=config.augmentation.cutmix_alpha,
        switch_prob=config.augmentation.switch_prob,
        smoothing=config.student.label_smoothing,
        enabled=mixing,
    )
    teacher_inputs = None
    if not config.ablation.ood_distill and config.student.regime != "vit":
        weak = np.stack([weak_augment(image, rng) for image in raw_batch.images])
        teacher_inputs = to_input(weak, mean, std)
    return AugmentedViews(student=student_batch, teacher_inputs=teacher_inputs)


def distill_step(student: DualTokenViT, teacher: Optional[TeacherCNN], raw_batch: RawBatch,
                 config: TrainConfig, epoch: int, state: DistillState,
                 views: Optional[AugmentedViews] = None) -> LossBreakdown:
    """
    Um passo do estudante: vistas aumentadas, rótulo duro do professor,
    perda 1/2 CE(f^c) + 1/2 DRW(f^d) e passo do otimizador.
    """
    regime = config.student.regime
    if teacher is not None and teacher.num_classes != student.num_classes:
        raise ConfigurationError(
            "teacher", f"professor com {teacher.num_classes} classes, estudante com {student.num_classes}"
        )
    if teacher is None and regime != "vit":
        raise ConfigurationError("student.regime", f"regime '{regime}' exige um professor")

    if views is None:
        views = prepare_views(raw_batch, config, epoch, student.num_classes,
                              state.mean, state.std, state.drw.start_epoch)
    batch = views.student

    teacher_labels = None
    if regime != "vit":
        teacher.eval()
        teacher_view = views.teacher_inputs if views.teacher_inputs is not None else batch.inputs
        with no_grad():
            teacher_logits, _ = teacher_forward(teacher, teacher_view)
        teacher_labels = hard_label(teacher_logits)

    student.train()
    out = vit_forward(student, batch.inputs)
    if regime == "vit":
        cls_term = ce_soft(out.logits_cls, batch.soft_targets)
        loss = cls_term
        dist_value = 0.0
        agree = float("nan")
    else:
        cls_term, dist_term = deit_lt_loss_terms(
            out.logits_cls, out.logits_dist, batch.soft_targets, teacher_labels, state.drw.weights(epoch)
        )
        loss = ops.add(ops.mul(cls_term, 0.5), ops.mul(dist_term, 0.5))
        dist_value = dist_term.item()
        agree = float(np.mean(hard_label(out.logits_dist) == teacher_labels))

    total = loss.item()
    _check_finite("distill_step", total, epoch, raw_batch.index)
    state.optimizer.zero_grad()
    loss.backward()
    state.optimizer.step()
    return LossBreakdown(total=total, cls=cls_term.item(), dist=dist_value,
                         teacher_agree=agree, batch_size=batch.size)


class TrainingService:
    """Orquestra os regimes de treino sobre um split LT já construído."""

    def __init__(self, config: TrainConfig, dataset: LTDataset, seeds: SeedBundle,
                 reports: Optional[ReportService] = None, on_epoch: Optional[EpochCallback] = None):
        self.config = config
        self.dataset = dataset
        self.seeds = seeds
        self.reports = reports
        self.on_epoch = on_epoch

    @property
    def output_dir(self) -> Path:
        return self.reports.output_dir if self.reports is not None else self.config.out_dir

    def _header(self, epoch: int, **extra) -> dict:
        header = {
            "epoch": epoch,
            "dataset": self.dataset.descriptor(),
            "seeds": self.seeds.to_dict(),
            "config": self.config.to_dict(),
        }
        header.update(extra)
        return header

    def _loader(self, batch_size: int, epoch: int, prepare, sampler=None) -> BatchLoader:
        return BatchLoader(
            self.dataset.images, self.dataset.labels, batch_size,
            order_seed=self.seeds.order, augment_seed=self.seeds.augment, epoch=epoch,
            prepare=prepare, workers=self.config.runtime.workers, prefetch=self.config.runtime.prefetch,
            sampler=sampler,
        )

    def _notify(self, phase: str, epoch: int, total: int, record):
        if self.on_epoch is not None:
            self.on_epoch(phase, epoch, total, record)

    # Professor

    def train_teacher(self) -> TrainingRun:
        """ResNet com LDAM, DRW a partir de K_teacher e SAM quando o toggle está ligado."""
        config, dataset = self.config, self.dataset
        settings = config.teacher
        teacher = build_teacher(config, dataset.num_classes, self.seeds)
        optimizer = build_teacher_optimizer(config, teacher)
        drw = DRWSchedule(config.drw.beta, config.teacher_drw_epoch, dataset.class_counts,
                          normalize=config.drw.teacher_normalize)

        steps_per_epoch = -(-dataset.size // settings.batch_size)
        total_steps = settings.epochs * steps_per_epoch
        warmup_steps = settings.warmup_epochs * steps_per_epoch
        records: List[TeacherEpochMetrics] = []
        checkpoint = self.output_dir / "teacher.tdlt"

        def prepare(raw_batch: RawBatch) -> LabeledBatch:
            return prepare_teacher_batch(raw_batch, dataset.mean, dataset.std)

        with LogContext(logger, "Treino do professor", f"{settings.epochs} épocas"):
            step = 0
            for epoch in range(settings.epochs):
                teacher.train()
                weights = drw.weights(epoch)
                epoch_lr = cosine_lr(step, total_steps, warmup_steps, settings.lr, settings.min_lr)
                loss_sum, seen = 0.0, 0
                for batch_index, batch in enumerate(self._loader(settings.batch_size, epoch, prepare)):
                    optimizer.lr = cosine_lr(step, total_steps, warmup_steps, settings.lr, settings.min_lr)

                    def closure(batch=batch):
                        z, _ = teacher(Tensor(batch.inputs))
                        return ldam_loss(z, batch.labels, dataset.class_counts,
                                         config.ldam.max_margin, config.ldam.scale, weights)

                    if isinstance(optimizer, SAM):
                        loss = optimizer.step(closure)
                    else:
                        optimizer.zero_grad()
                        loss_tensor = closure()
                        loss = loss_tensor.item()
                        loss_tensor.backward()
                        optimizer.step()
                    _check_finite("train_teacher", loss, epoch, batch_index)
                    loss_sum += loss * len(batch.labels)
                    seen += len(batch.labels)
                    step += 1

                accuracy = evaluate_teacher(teacher, dataset, config.diagnostics.batch_size)
                record = TeacherEpochMetrics(
                    epoch=epoch + 1, lr=epoch_lr, loss=loss_sum / max(seen, 1), acc=accuracy.overall,
                    head=accuracy.head, mid=accuracy.mid, tail=accuracy.tail,
                )
                records.append(record)
                log_epoch_summary(logger, "professor", epoch + 1, settings.epochs, record.loss, epoch_lr)
                if self.reports is not None:
                    self.reports.write_teacher_metrics(records)
                if settings.checkpoint_every and (epoch + 1) % settings.checkpoint_every == 0:
                    path = self.output_dir / "checkpoints" / f"teacher_epoch_{epoch + 1:04d}.tdlt"
                    save_teacher(path, teacher, self._header(epoch + 1), optimizer)
                    log_checkpoint_saved(logger, str(path), epoch + 1)
                self._notify("teacher", epoch + 1, settings.epochs, record)

            teacher.eval()
            save_teacher(checkpoint, teacher, self._header(settings.epochs), optimizer)
            log_checkpoint_saved(logger, str(checkpoint), settings.epochs)
        if self.reports is not None and self.reports.manifest is not None:
            self.reports.manifest.record_output(checkpoint)
        return TrainingRun(model=teacher, metrics=RunMetrics(records=records), checkpoint=checkpoint)

    # Estudante

    def train_student(self, teacher: Optional[TeacherCNN] = None, resume_from=None,
                      checkpoint_name: str = "student.tdlt",
                      metrics_name: str = "metrics.csv") -> TrainingRun:
        """
        Treino completo com warmup, decaimento de cosseno e fase DRW.

        Métricas são reescritas a cada época; `resume_from` retoma pesos,
        estado do otimizador, época e registros anteriores.
        """
        config, dataset = self.config, self.dataset
        settings = config.student
        if settings.regime not in REGIMES:
            raise ConfigurationError("student.regime", f"regime desconhecido '{settings.regime}'")
        if settings.regime == "vit":
            teacher = None
        elif teacher is None:
            raise ConfigurationError("teacher", f"regime '{settings.regime}' exige checkpoint do professor")
        elif teacher.num_classes != dataset.num_classes:
            raise ConfigurationError(
                "teacher", f"professor com {teacher.num_classes} classes, dataset com {dataset.num_classes}"
            )

        student = build_student(config, dataset.num_classes, self.seeds)
        optimizer = build_student_optimizer(config, student)
        state = DistillState(optimizer=optimizer, drw=student_drw_schedule(config, dataset.class_counts),
                             mean=dataset.mean, std=dataset.std)

        start_epoch = 0
        records: List[EpochMetrics] = []
        evaluations: List[EvaluationResult] = []
        if resume_from is not None:
            entries, header = read_checkpoint(resume_from, "student")
            student.load_state_dict(entries, "student.", str(resume_from))
            optimizer.load_state_entries(entries, "optim.", str(resume_from))
            start_epoch = int(header.get("epoch", 0))
            records = [EpochMetrics(**row) for row in header.get("metrics", [])][:start_epoch]
            logger.info(f"Retomando o estudante de {resume_from} na época {start_epoch}")

        steps_per_epoch = -(-dataset.size // settings.batch_size)
        total_steps = settings.epochs * steps_per_epoch
        warmup_steps = settings.warmup_epochs * steps_per_epoch
        checkpoint = self.output_dir / checkpoint_name

        def student_header(epoch: int) -> dict:
            return self._header(epoch, regime=settings.regime, metrics=[r.to_row() for r in records])

        with LogContext(logger, "Treino do estudante", f"regime {settings.regime}"):
            for epoch in range(start_epoch, settings.epochs):
                step = epoch * steps_per_epoch
                epoch_lr = cosine_lr(step, total_steps, warmup_steps, settings.lr, settings.min_lr)
                cls_sum = dist_sum = agree_sum = 0.0
                seen = 0

                def make_views(raw_batch: RawBatch, epoch=epoch):
                    views = prepare_views(raw_batch, config, epoch, dataset.num_classes,
                                          dataset.mean, dataset.std, state.drw.start_epoch)
                    return raw_batch, views

                for raw_batch, views in self._loader(settings.batch_size, epoch, make_views):
                    optimizer.lr = cosine_lr(step, total_steps, warmup_steps, settings.lr, settings.min_lr)
                    breakdown = distill_step(student, teacher, raw_batch, config, epoch, state, views)
                    cls_sum += breakdown.cls * breakdown.batch_size
                    dist_sum += breakdown.dist * breakdown.batch_size
                    agree_sum += breakdown.teacher_agree * breakdown.batch_size
                    seen += breakdown.batch_size
                    step += 1

                evaluation = evaluate_student(student, dataset, config.diagnostics.batch_size)
                evaluations.append(evaluation)
                seen = max(seen, 1)
                record = EpochMetrics(
                    epoch=epoch + 1,
                    lr=epoch_lr,
                    loss_cls=cls_sum / seen,
                    loss_dist=dist_sum / seen,
                    acc_avg=evaluation.averaged.overall,
                    acc_cls=evaluation.cls_only.overall,
                    acc_dist=evaluation.dist_only.overall,
                    head=evaluation.averaged.head,
                    mid=evaluation.averaged.mid,
                    tail=evaluation.averaged.tail,
                    cosine_cls_dist=evaluation.cosine_cls_dist,
                    teacher_agree=agree_sum / seen,
                )
                records.append(record)
                log_epoch_summary(logger, "estudante", epoch + 1, settings.epochs,
                                  0.5 * (record.loss_cls + record.loss_dist), epoch_lr)
                if self.reports is not None:
                    self.reports.write_student_metrics(records, metrics_name)
                if settings.checkpoint_every and (epoch + 1) % settings.checkpoint_every == 0:
                    path = self.output_dir / "checkpoints" / f"student_epoch_{epoch + 1:04d}.tdlt"
                    save_student(path, student, student_header(epoch + 1), optimizer)
                    log_checkpoint_saved(logger, str(path), epoch + 1)
                self._notify("student", epoch + 1, settings.epochs, record)

            final_epoch = max(settings.epochs, start_epoch)
            save_student(checkpoint, student, student_header(final_epoch), optimizer)
            log_checkpoint_saved(logger, str(checkpoint), final_epoch)
        if self.reports is not None and self.reports.manifest is not None:
            self.reports.manifest.record_output(checkpoint)
        return TrainingRun(model=student, metrics=RunMetrics(records=records, evaluations=evaluations),
                           checkpoint=checkpoint)

    # cRT

    def crt_retrain(self, student_checkpoint, checkpoint_name: str = "student_crt.tdlt") -> TrainingRun:
        """Congela o tronco, reinicializa as cabeças e as treina com amostragem balanceada."""
        config, dataset = self.config, self.dataset
        settings = config.crt
        student, header, _ = load_student(student_checkpoint)
        if student.num_classes != dataset.num_classes:
            raise ConfigurationError(
                "student", f"estudante com {student.num_classes} classes, dataset com {dataset.num_classes}"
            )
        for p in student.parameters():
            p.requires_grad = False
        student.reset_heads(np.random.default_rng([self.seeds.init, CRT_STREAM]))
        heads = student.head_parameters()
        optimizer = AdamW(heads, lr=settings.lr, betas=tuple(config.student.betas),
                          eps=config.student.eps, weight_decay=settings.weight_decay)
        sampler = ClassBalancedSampler(dataset.labels, dataset.num_classes)

        steps_per_epoch = -(-dataset.size // settings.batch_size)
        total_steps = settings.epochs * steps_per_epoch
        evaluations: List[EvaluationResult] = []

        def prepare(raw_batch: RawBatch) -> LabeledBatch:
            return prepare_teacher_batch(raw_batch, dataset.mean, dataset.std)

        with LogContext(logger, "Re-treino do classificador (cRT)", f"{settings.epochs} épocas"):
            step = 0
            for epoch in range(settings.epochs):
                epoch_lr = cosine_lr(step, total_steps, 0, settings.lr)
                loss_sum, seen = 0.0, 0
                for batch_index, batch in enumerate(self._loader(settings.batch_size, epoch, prepare, sampler)):
                    optimizer.lr = cosine_lr(step, total_steps, 0, settings.lr)
                    student.eval()
                    out = vit_forward(student, batch.inputs)
                    loss = ce_smoothed(out.logits_cls, batch.labels, settings.label_smoothing)
                    if student.has_dist_token:
                        dist = ce_smoothed(out.logits_dist, batch.labels, settings.label_smoothing)
                        loss = ops.mul(ops.add(loss, dist), 0.5)
                    value = loss.item()
                    _check_finite("crt_retrain", value, epoch, batch_index)
                    optimizer.zero_grad()
                    loss.backward()
                    optimizer.step()
                    loss_sum += value * len(batch.labels)
                    seen += len(batch.labels)
                    step += 1

                evaluation = evaluate_student(student, dataset, config.diagnostics.batch_size)
                evaluations.append(evaluation)
                log_epoch_summary(logger, "cRT", epoch + 1, settings.epochs, loss_sum / max(seen, 1), epoch_lr)
                self._notify("crt", epoch + 1, settings.epochs, evaluation)

            checkpoint = self.output_dir / checkpoint_name
            save_student(checkpoint, student, self._header(
                int(header.get("epoch", 0)), regime=header.get("regime"), crt=True,
                source=str(student_checkpoint), crt_epochs=settings.epochs,
            ))
        if self.reports is not None and self.reports.manifest is not None:
            self.reports.manifest.record_output(checkpoint)
        return TrainingRun(model=student, metrics=RunMetrics(evaluations=evaluations), checkpoint=checkpoint)
