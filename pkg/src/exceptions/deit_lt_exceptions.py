"""Exceções customizadas para o treinamento DeiT-LT."""


class DeitLtException(Exception):
    """Exceção base para todas as exceções do projeto."""

    exit_code: int = 1

    def __init__(self, message: str, original_exception: Exception = None):
        self.message = message
        self.original_exception = original_exception
        super().__init__(self.message)


class ConfigurationError(DeitLtException):
    """Erro de configuração."""

    exit_code = 2

    def __init__(self, setting: str, reason: str, original_exception: Exception = None):
        self.setting = setting
        self.reason = reason
        message = f"Erro de configuração '{setting}': {reason}"
        super().__init__(message, original_exception)


class ParameterError(DeitLtException):
    """Parâmetro numérico fora do domínio válido."""

    exit_code = 2

    def __init__(self, parameter: str, reason: str, original_exception: Exception = None):
        self.parameter = parameter
        self.reason = reason
        message = f"Parâmetro inválido '{parameter}': {reason}"
        super().__init__(message, original_exception)


class DataError(DeitLtException):
    """Exceção base para erros de dados e arquivos."""

    exit_code = 3


class DataFormatError(DataError):
    """Arquivo de dados com formato inválido."""

    def __init__(self, path: str, reason: str, original_exception: Exception = None):
        self.path = str(path)
        self.reason = reason
        message = f"Formato inválido em '{self.path}': {reason}"
        super().__init__(message, original_exception)


class CheckpointError(DataError):
    """Checkpoint ausente ou corrompido."""

    def __init__(self, path: str, reason: str, original_exception: Exception = None):
        self.path = str(path)
        self.reason = reason
        message = f"Falha no checkpoint '{self.path}': {reason}"
        super().__init__(message, original_exception)


class ReportGenerationError(DataError):
    """Erro na geração de relatórios."""

    def __init__(self, report_type: str, reason: str, original_exception: Exception = None):
        self.report_type = report_type
        self.reason = reason
        message = f"Falha na geração do relatório '{report_type}': {reason}"
        super().__init__(message, original_exception)


class ShapeError(DeitLtException):
    """Dimensões incompatíveis em uma operação."""

    exit_code = 4

    def __init__(self, operation: str, reason: str, original_exception: Exception = None):
        self.operation = operation
        self.reason = reason
        message = f"Dimensões incompatíveis em '{operation}': {reason}"
        super().__init__(message, original_exception)


class NumericError(DeitLtException):
    """Falha numérica (NaN, divergência, não convergência)."""

    exit_code = 4

    def __init__(self, operation: str, reason: str, original_exception: Exception = None):
        self.operation = operation
        self.reason = reason
        message = f"Falha numérica em '{operation}': {reason}"
        super().__init__(message, original_exception)
