#!/usr/bin/env python3
"""
Script principal CLI para o treinamento DeiT-LT.

Subcomandos: dataset build, train-teacher, train-student, crt, eval,
diagnose e ablate.
"""

import argparse
import sys
import time
from pathlib import Path
from typing import Any, Dict, List, Optional

# Adiciona src ao path para imports
sys.path.insert(0, str(Path(__file__).parent / "src"))

from src import __version__
from src.config import TrainConfig, parse_config
from src.exceptions import ConfigurationError, DeitLtException
from src.models.run_manifest import RunManifest
from src.presenters import ConsolePresenter
from src.services import (
    DIAGNOSTIC_MODES,
    AblationService,
    DatasetService,
    DiagnosticsService,
    ReportService,
    TrainingService,
    evaluate,
    evaluate_teacher,
    load_student,
    load_teacher,
)
from src.utils import (
    LogContext,
    SeedBundle,
    default_logger,
    default_log_file,
    derive_seeds,
    log_config_loaded,
    log_report_generated,
    setup_logger,
    validate_rollout_target,
)

# destino do argparse -> chave pontuada do TrainConfig
COMMON_OVERRIDES = {
    "data_dir": "output.data_dir",
    "out_dir": "output.out_dir",
    "seed": "runtime.seed",
    "workers": "runtime.workers",
    "rho": "dataset.rho",
    "n_max": "dataset.n_max",
    "dataset_kind": "dataset.kind",
}
COMMAND_OVERRIDES = {
    "train-teacher": {
        "epochs": "teacher.epochs",
        "batch_size": "teacher.batch_size",
        "lr": "teacher.lr",
        "warmup_epochs": "teacher.warmup_epochs",
        "optimizer": "teacher.optimizer",
        "sam": "ablation.sam_teacher",
        "sam_rho": "sam.rho",
        "drw_epoch": "drw.teacher_epoch",
    },
    "train-student": {
        "epochs": "student.epochs",
        "batch_size": "student.batch_size",
        "lr": "student.lr",
        "warmup_epochs": "student.warmup_epochs",
        "regime": "student.regime",
        "drw_epoch": "drw.student_epoch",
        "drw_normalize": "drw.normalize",
        "ood_distill": "ablation.ood_distill",
        "drw": "ablation.drw",
        "mixup_alpha": "augmentation.mixup_alpha",
        "cutmix_alpha": "augmentation.cutmix_alpha",
        "embed_dim": "student_model.embed_dim",
        "depth": "student_model.depth",
        "n_heads": "student_model.n_heads",
        "patch_size": "student_model.patch_size",
    },
    "crt": {
        "epochs": "crt.epochs",
        "batch_size": "crt.batch_size",
        "lr": "crt.lr",
    },
    "diagnose": {
        "n_samples": "diagnostics.n_samples",
        "rank_tol": "diagnostics.rank_tol",
        "rollout_target": "diagnostics.rollout_target",
        "rollout_images": "diagnostics.rollout_images",
    },
    "ablate": {
        "teacher_epochs": "teacher.epochs",
        "student_epochs": "student.epochs",
    },
}


def collect_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    """Flags definidas viram sobrescritas pontuadas; flags ausentes ficam None e são ignoradas."""
    mapping = dict(COMMON_OVERRIDES)
    mapping.update(COMMAND_OVERRIDES.get(args.command, {}))
    values = vars(args)
    return {dotted: values.get(dest) for dest, dotted in mapping.items()}


def _rollout_target(value: str):
    ok, target, message = validate_rollout_target(value)
    if not ok:
        raise argparse.ArgumentTypeError(message)
    return target


class DeitLtCLI:
    """Interface CLI principal do DeiT-LT."""

    def __init__(self, presenter: Optional[ConsolePresenter] = None):
        self.presenter = presenter or ConsolePresenter()
        self.logger = default_logger
        self.config: Optional[TrainConfig] = None
        self.seeds: Optional[SeedBundle] = None
        self.reports: Optional[ReportService] = None

    def run(self, args: argparse.Namespace) -> int:
        """Executa o subcomando; devolve o código de saída do processo."""
        started = time.perf_counter()
        try:
            self.config = parse_config(args.config, collect_overrides(args))
            out_dir = self.config.out_dir
            self.logger = setup_logger(
                level=args.log_level or self.config.runtime.log_level,
                log_file=default_log_file(out_dir),
                use_colors=not args.no_color,
            )
            log_config_loaded(self.logger, args.config or "padrão")
            self.seeds = derive_seeds(self.config.runtime.seed)
            manifest = RunManifest(
                command=" ".join([args.command] + ([args.action] if getattr(args, "action", None) else [])),
                config=self.config.to_dict(),
                code_version=__version__,
                seeds=self.seeds.to_dict(),
                deviations=self.config.deviations(),
            )
            self.reports = ReportService(str(out_dir), manifest)
            self.reports.write_manifest()

            self.presenter.show_header(manifest.command)
            handler = getattr(self, "_cmd_" + args.command.replace("-", "_"))
            outputs = handler(args) or []

            manifest.timings["total_s"] = round(time.perf_counter() - started, 3)
            manifest_path = self.reports.write_manifest()
            log_report_generated(self.logger, "manifesto", str(manifest_path))
            self.presenter.show_outputs([str(p) for p in outputs] + [str(manifest_path)])
            return 0

        except DeitLtException as e:
            self.presenter.stop_progress()
            self.presenter.show_error(str(e), type(e).__name__)
            self.logger.error(str(e))
            return e.exit_code
        except KeyboardInterrupt:
            self.presenter.stop_progress()
            self.presenter.show_warning("Operação cancelada pelo usuário")
            return 130
        except Exception as e:
            self.presenter.stop_progress()
            self.presenter.show_error(f"Erro inesperado: {str(e)}", "Erro Interno")
            self.logger.exception("Erro inesperado")
            return 1

    # Auxiliares

    def _build_dataset(self):
        service = DatasetService(self.config, self.seeds, self.reports)
        dataset, digest = service.build_with_manifest()
        return dataset, digest

    def _timed(self, key: str, context: LogContext):
        self.reports.manifest.timings[key] = round(context.duration, 3)

    def _with_progress(self, fn):
        self.presenter.create_progress_bar().start()
        try:
            return fn()
        finally:
            self.presenter.stop_progress()

    # Subcomandos

    def _cmd_dataset(self, args) -> List[Path]:
        dataset, digest = self._build_dataset()
        self.presenter.show_dataset(dataset, digest)
        return [self.reports.output_dir / "lt_split.csv"]

    def _cmd_train_teacher(self, args) -> List[Path]:
        dataset, _ = self._build_dataset()
        service = TrainingService(self.config, dataset, self.seeds, self.reports, self.presenter.on_epoch)
        with LogContext(self.logger, "train-teacher") as context:
            run = self._with_progress(service.train_teacher)
        self._timed("train_teacher_s", context)
        self.presenter.show_epoch_table(run.metrics.records, "Professor")
        return [run.checkpoint, self.reports.output_dir / "teacher_metrics.csv"]

    def _cmd_train_student(self, args) -> List[Path]:
        teacher = None
        if self.config.student.regime != "vit":
            if not args.teacher:
                raise ConfigurationError("--teacher", "obrigatório para os regimes deit_lt e deit")
            teacher, _, _ = load_teacher(args.teacher)
        dataset, _ = self._build_dataset()
        service = TrainingService(self.config, dataset, self.seeds, self.reports, self.presenter.on_epoch)
        with LogContext(self.logger, "train-student") as context:
            run = self._with_progress(lambda: service.train_student(teacher, resume_from=args.resume))
        self._timed("train_student_s", context)
        self.presenter.show_epoch_table(run.metrics.records, "Estudante")
        if run.metrics.evaluations:
            self.presenter.show_evaluation(run.metrics.evaluations[-1])
        return [run.checkpoint, self.reports.output_dir / "metrics.csv"]

    def _cmd_crt(self, args) -> List[Path]:
        load_student(args.student)
        dataset, _ = self._build_dataset()
        service = TrainingService(self.config, dataset, self.seeds, self.reports, self.presenter.on_epoch)
        with LogContext(self.logger, "crt") as context:
            run = self._with_progress(lambda: service.crt_retrain(args.student))
        self._timed("crt_s", context)
        if run.metrics.evaluations:
            self.presenter.show_evaluation(run.metrics.evaluations[-1], "Após cRT")
        return [run.checkpoint]

    def _cmd_eval(self, args) -> List[Path]:
        student, _, _ = load_student(args.checkpoint)
        dataset, _ = self._build_dataset()
        with LogContext(self.logger, "eval") as context:
            result = evaluate(args.checkpoint, dataset, args.split, self.config.diagnostics.batch_size, student)
        self._timed("eval_s", context)
        self.presenter.show_evaluation(result)
        paths = [self.reports.write_evaluation(result)]
        if args.teacher:
            teacher, _, _ = load_teacher(args.teacher)
            self.presenter.show_teacher_accuracy(evaluate_teacher(teacher, dataset))
        return paths

    def _cmd_diagnose(self, args) -> List[Path]:
        mode = args.mode
        if mode == "entropy":
            if not args.teacher:
                raise ConfigurationError("--teacher", "obrigatório no modo entropy")
            model, _, _ = load_teacher(args.teacher)
        else:
            if not args.student:
                raise ConfigurationError("--student", f"obrigatório no modo {mode}")
            model, _, _ = load_student(args.student)
        dataset, _ = self._build_dataset()
        service = DiagnosticsService(self.config, dataset, self.seeds, self.reports)
        with LogContext(self.logger, f"diagnose {mode}") as context:
            if mode == "locality":
                self.presenter.show_locality(service.locality(model))
                paths = [self.reports.output_dir / "locality.csv"]
            elif mode == "rollout":
                paths = service.rollout(model)
            elif mode == "rank":
                self.presenter.show_rank(service.rank(model))
                paths = [self.reports.output_dir / "rank.csv"]
            elif mode == "entropy":
                self.presenter.show_entropy(service.entropy(model))
                paths = [self.reports.output_dir / "entropy.csv"]
            else:
                self.presenter.show_divergence(service.divergence(model))
                paths = [self.reports.output_dir / "divergence.csv"]
        self._timed(f"diagnose_{mode}_s", context)
        return paths

    def _cmd_ablate(self, args) -> List[Path]:
        dataset, _ = self._build_dataset()
        service = AblationService(self.config, dataset, self.seeds, self.reports, self.presenter.on_epoch)
        paths = [self.reports.output_dir / "ablation.csv"]
        with LogContext(self.logger, "ablate") as context:
            if args.seeds:
                self.reports.manifest.replicate_seeds = list(args.seeds)
                summary = self._with_progress(lambda: service.run_seeds(args.seeds))
            else:
                rows = self._with_progress(service.run)
        self._timed("ablate_s", context)
        if args.seeds:
            self.presenter.show_seed_summary(summary)
            return paths + [self.reports.output_dir / "ablation_summary.csv"]
        self.presenter.show_ablation(rows)
        return paths


def _add_common_arguments(parser: argparse.ArgumentParser):
    parser.add_argument("--config", help="Arquivo YAML de configuração")
    parser.add_argument("--data-dir", help="Diretório do CIFAR-10 binário (ou TDLT_DATA_DIR)")
    parser.add_argument("--out-dir", help="Diretório de saída (ou TDLT_OUT_DIR)")
    parser.add_argument("--seed", type=int, help="Semente mestra")
    parser.add_argument("--workers", type=int, help="Threads de preparação de lotes")
    parser.add_argument("--rho", type=float, help="Fator de desbalanceamento")
    parser.add_argument("--n-max", type=int, help="Imagens da classe mais frequente")
    parser.add_argument("--dataset-kind", choices=["cifar10", "cifar100", "generic"], help="Regra de grupos")
    parser.add_argument("--log-level", choices=["DEBUG", "INFO", "WARNING", "ERROR"], default=None,
                        help="Nível de log (padrão: runtime.log_level)")
    parser.add_argument("--no-color", action="store_true", help="Desabilita cores na saída")


def _add_toggle(parser: argparse.ArgumentParser, name: str, help_text: str):
    parser.add_argument(f"--{name}", dest=name.replace("-", "_"), action=argparse.BooleanOptionalAction,
                        default=None, help=help_text)


def create_parser() -> argparse.ArgumentParser:
    """Cria parser de argumentos da linha de comando."""
    parser = argparse.ArgumentParser(
        description="DeiT-LT: ViT com tokens CLS/DIST destilado de uma ResNet para dados long-tailed",
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog="""
Exemplos de uso:
  %(prog)s dataset build --rho 100 --n-max 5000
  %(prog)s train-teacher --epochs 200
  %(prog)s train-student --teacher runs/teacher.tdlt
  %(prog)s crt --student runs/student.tdlt
  %(prog)s eval --checkpoint runs/student.tdlt
  %(prog)s diagnose rank --student runs/student.tdlt
  %(prog)s ablate --teacher-epochs 3 --student-epochs 3
  %(prog)s ablate --seeds 0 1 2
        """,
    )
    subparsers = parser.add_subparsers(dest="command", metavar="COMANDO")
    subparsers.required = True

    dataset = subparsers.add_parser("dataset", help="Constrói o split long-tailed")
    dataset.add_argument("action", choices=["build"])
    _add_common_arguments(dataset)

    teacher = subparsers.add_parser("train-teacher", help="Treina a ResNet professora (LDAM-DRW-SAM)")
    _add_common_arguments(teacher)
    teacher.add_argument("--epochs", type=int)
    teacher.add_argument("--batch-size", type=int)
    teacher.add_argument("--lr", type=float)
    teacher.add_argument("--warmup-epochs", type=int)
    teacher.add_argument("--optimizer", choices=["sgd", "adamw"])
    teacher.add_argument("--sam-rho", type=float)
    teacher.add_argument("--drw-epoch", type=int)
    _add_toggle(teacher, "sam", "Envolve o otimizador com SAM")

    student = subparsers.add_parser("train-student", help="Treina o ViT estudante")
    _add_common_arguments(student)
    student.add_argument("--teacher", help="Checkpoint do professor")
    student.add_argument("--resume", help="Checkpoint do estudante para retomar")
    student.add_argument("--regime", choices=["deit_lt", "deit", "vit"])
    student.add_argument("--epochs", type=int)
    student.add_argument("--batch-size", type=int)
    student.add_argument("--lr", type=float)
    student.add_argument("--warmup-epochs", type=int)
    student.add_argument("--drw-epoch", type=int)
    student.add_argument("--mixup-alpha", type=float)
    student.add_argument("--cutmix-alpha", type=float)
    student.add_argument("--embed-dim", type=int)
    student.add_argument("--depth", type=int)
    student.add_argument("--n-heads", type=int)
    student.add_argument("--patch-size", type=int)
    _add_toggle(student, "drw-normalize", "Reescala os pesos DRW para média 1")
    _add_toggle(student, "ood-distill", "Professor vê as mesmas imagens fortes do estudante")
    _add_toggle(student, "drw", "Re-pondera o termo DIST a partir de K")

    crt = subparsers.add_parser("crt", help="Re-treina as cabeças com amostragem balanceada")
    _add_common_arguments(crt)
    crt.add_argument("--student", required=True, help="Checkpoint do estudante")
    crt.add_argument("--epochs", type=int)
    crt.add_argument("--batch-size", type=int)
    crt.add_argument("--lr", type=float)

    evaluation = subparsers.add_parser("eval", help="Avalia um estudante por grupo de classes")
    _add_common_arguments(evaluation)
    evaluation.add_argument("--checkpoint", required=True, help="Checkpoint do estudante")
    evaluation.add_argument("--split", choices=["val", "train"], default="val")
    evaluation.add_argument("--teacher", help="Checkpoint do professor (opcional)")

    diagnose = subparsers.add_parser("diagnose", help="Diagnósticos de atenção, rank e entropia")
    diagnose.add_argument("mode", choices=DIAGNOSTIC_MODES)
    _add_common_arguments(diagnose)
    diagnose.add_argument("--student", help="Checkpoint do estudante")
    diagnose.add_argument("--teacher", help="Checkpoint do professor (modo entropy)")
    diagnose.add_argument("--n-samples", type=int)
    diagnose.add_argument("--rank-tol", type=float)
    diagnose.add_argument("--rollout-target", type=_rollout_target)
    diagnose.add_argument("--rollout-images", type=int)

    ablate = subparsers.add_parser("ablate", help="Grade 2x2x2 OOD x DRW x SAM")
    _add_common_arguments(ablate)
    ablate.add_argument("--teacher-epochs", type=int)
    ablate.add_argument("--student-epochs", type=int)
    ablate.add_argument("--seeds", type=int, nargs="+",
                        help="Repete a grade em cada semente e resume média e erro padrão")

    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Função principal; devolve o código de saída."""
    parser = create_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    return DeitLtCLI().run(args)


if __name__ == "__main__":
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        print("\nOperação cancelada pelo usuário.")
        sys.exit(130)
