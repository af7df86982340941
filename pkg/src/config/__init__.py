"""__init__.py para config."""

from .config_manager import (
    ConfigManager,
    TrainConfig,
    DatasetSettings,
    StudentModelSettings,
    TeacherModelSettings,
    StudentSettings,
    TeacherSettings,
    AugmentationSettings,
    DRWSettings,
    LDAMSettings,
    SAMSettings,
    AblationSettings,
    CRTSettings,
    DiagnosticsSettings,
    RuntimeSettings,
    OutputSettings,
    parse_config,
)

__all__ = [
    "ConfigManager",
    "TrainConfig",
    "DatasetSettings",
    "StudentModelSettings",
    "TeacherModelSettings",
    "StudentSettings",
    "TeacherSettings",
    "AugmentationSettings",
    "DRWSettings",
    "LDAMSettings",
    "SAMSettings",
    "AblationSettings",
    "CRTSettings",
    "DiagnosticsSettings",
    "RuntimeSettings",
    "OutputSettings",
    "parse_config",
]
