"""Modelos de dados do treinamento DeiT-LT."""

from .dataset import (
    ClassGroup,
    RawDataset,
    LTDataset,
    RawBatch,
    LabeledBatch,
    AugmentedBatch,
    AugmentedViews,
)
from .training_results import (
    LossBreakdown,
    GroupAccuracy,
    Predictions,
    EvaluationResult,
    EpochMetrics,
    TeacherEpochMetrics,
    RunMetrics,
)
from .diagnostics import (
    TokenKind,
    AttentionRecord,
    FeatureMatrix,
    LocalityProfile,
    RolloutResult,
    FeatureRankResult,
    EntropySummary,
    DivergenceResult,
)
from .run_manifest import RunManifest

__all__ = [
    'ClassGroup',
    'RawDataset',
    'LTDataset',
    'RawBatch',
    'LabeledBatch',
    'AugmentedBatch',
    'AugmentedViews',
    'LossBreakdown',
    'GroupAccuracy',
    'Predictions',
    'EvaluationResult',
    'EpochMetrics',
    'TeacherEpochMetrics',
    'RunMetrics',
    'TokenKind',
    'AttentionRecord',
    'FeatureMatrix',
    'LocalityProfile',
    'RolloutResult',
    'FeatureRankResult',
    'EntropySummary',
    'DivergenceResult',
    'RunManifest',
]
