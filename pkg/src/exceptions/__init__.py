"""Exceções customizadas para o treinamento DeiT-LT."""

from .deit_lt_exceptions import (
    DeitLtException,
    ConfigurationError,
    ParameterError,
    DataError,
    DataFormatError,
    CheckpointError,
    ReportGenerationError,
    ShapeError,
    NumericError,
)

__all__ = [
    'DeitLtException',
    'ConfigurationError',
    'ParameterError',
    'DataError',
    'DataFormatError',
    'CheckpointError',
    'ReportGenerationError',
    'ShapeError',
    'NumericError',
]
