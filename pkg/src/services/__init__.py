"""__init__.py para services."""

from .report_service import ReportService, file_digest
from .model_store import load_student, load_teacher, save_student, save_teacher, parameter_digest
from .dataset_service import DatasetService
from .evaluation_service import (
    compute_group_accuracy,
    collect_outputs,
    infer,
    evaluate,
    evaluate_student,
    evaluate_teacher,
)
from .training_service import (
    DistillState,
    TrainingRun,
    TrainingService,
    build_student,
    build_teacher,
    distill_step,
    prepare_views,
)
from .diagnostics_service import DiagnosticsService, MODES as DIAGNOSTIC_MODES
from .ablation_service import AblationService, ablation_tag

__all__ = [
    "ReportService",
    "file_digest",
    "load_student",
    "load_teacher",
    "save_student",
    "save_teacher",
    "parameter_digest",
    "DatasetService",
    "compute_group_accuracy",
    "collect_outputs",
    "infer",
    "evaluate",
    "evaluate_student",
    "evaluate_teacher",
    "DistillState",
    "TrainingRun",
    "TrainingService",
    "build_student",
    "build_teacher",
    "distill_step",
    "prepare_views",
    "DiagnosticsService",
    "DIAGNOSTIC_MODES",
    "AblationService",
    "ablation_tag",
]
