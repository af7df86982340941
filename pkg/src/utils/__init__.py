"""__init__.py para utils."""

from .validators import (
    require_open_unit,
    require_probability,
    require_at_least,
    require_nonnegative,
    require_positive_counts,
    require_labels,
    validate_rollout_target,
    format_duration,
)

from .logger import (
    setup_logger,
    default_log_file,
    ColoredFormatter,
    LogContext,
    log_epoch_summary,
    log_checkpoint_saved,
    log_dataset_built,
    log_config_loaded,
    log_report_generated,
    default_logger,
)

from .seeding import SeedBundle, derive_seeds, epoch_rng, batch_rng

__all__ = [
    # Validators
    "require_open_unit",
    "require_probability",
    "require_at_least",
    "require_nonnegative",
    "require_positive_counts",
    "require_labels",
    "validate_rollout_target",
    "format_duration",

    # Logger
    "setup_logger",
    "default_log_file",
    "ColoredFormatter",
    "LogContext",
    "log_epoch_summary",
    "log_checkpoint_saved",
    "log_dataset_built",
    "log_config_loaded",
    "log_report_generated",
    "default_logger",

    # Seeding
    "SeedBundle",
    "derive_seeds",
    "epoch_rng",
    "batch_rng",
]
