"""Utilitários para logging."""

import logging
import sys
from datetime import datetime
from pathlib import Path
from typing import List, Optional, Union

from .validators import format_duration

ROOT_LOGGER = "deit_lt"
LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
FILE_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(filename)s:%(lineno)d - %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


class ColoredFormatter(logging.Formatter):
    """Colore o nível e a área (`deit_lt.<área>`) no console."""

    LEVEL_COLORS = {
        "DEBUG": "\033[36m",
        "INFO": "\033[32m",
        "WARNING": "\033[33m",
        "ERROR": "\033[31m",
        "CRITICAL": "\033[35m",
    }
    AREA_COLOR = "\033[34m"
    RESET = "\033[0m"

    def format(self, record):
        # cópia: os demais handlers recebem o registro sem ANSI
        record = logging.makeLogRecord(record.__dict__)
        color = self.LEVEL_COLORS.get(record.levelname)
        if color:
            record.levelname = f"{color}{record.levelname}{self.RESET}"
        root, _, area = record.name.partition(".")
        if area:
            record.name = f"{root}.{self.AREA_COLOR}{area}{self.RESET}"
        return super().format(record)


def _console_handler(use_colors: bool) -> logging.Handler:
    handler = logging.StreamHandler(sys.stderr)
    colored = use_colors and sys.stderr.isatty()
    handler.setFormatter((ColoredFormatter if colored else logging.Formatter)(LOG_FORMAT, DATE_FORMAT))
    return handler


def _file_handler(path: Path) -> logging.Handler:
    path.parent.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(path, encoding="utf-8")
    handler.setFormatter(logging.Formatter(FILE_FORMAT, DATE_FORMAT))
    return handler


def _reset_handlers(logger: logging.Logger, handlers: List[logging.Handler], level: int):
    for old in logger.handlers[:]:
        logger.removeHandler(old)
        old.close()
    logger.setLevel(level)
    logger.propagate = False
    for handler in handlers:
        logger.addHandler(handler)


def setup_logger(
    name: str = ROOT_LOGGER,
    level: str = "INFO",
    log_file: Optional[Union[str, Path]] = None,
    use_colors: bool = True,
    capture_warnings: bool = True,
) -> logging.Logger:
    """
    Configura o logger raiz da bancada; as áreas (`deit_lt.training`,
    `deit_lt.data`, ...) herdam os handlers.

    Com `log_file`, grava também em arquivo (sem cores). Com
    `capture_warnings`, avisos do numpy (overflow, divisão por zero)
    passam pelos mesmos handlers.
    """
    log_level = getattr(logging, level.upper(), logging.INFO)
    handlers = [_console_handler(use_colors)]
    if log_file is not None:
        handlers.append(_file_handler(Path(log_file)))
    for handler in handlers:
        handler.setLevel(log_level)

    logger = logging.getLogger(name)
    _reset_handlers(logger, handlers, log_level)

    logging.captureWarnings(capture_warnings)
    if capture_warnings:
        _reset_handlers(logging.getLogger("py.warnings"), handlers, logging.WARNING)
    return logger


def default_log_file(out_dir: Union[str, Path]) -> Path:
    """Arquivo de log do dia dentro do diretório de saída."""
    return Path(out_dir) / "logs" / f"{ROOT_LOGGER}_{datetime.now():%Y%m%d}.log"


def log_epoch_summary(logger: logging.Logger, phase: str, epoch: int, total: int, loss: float, lr: float):
    """Loga o fechamento de uma época."""
    logger.info(f"[{phase}] época {epoch}/{total} - loss {loss:.4f} - lr {lr:.3e}")


def log_checkpoint_saved(logger: logging.Logger, path: str, epoch: int):
    logger.info(f"Checkpoint da época {epoch} salvo em: {path}")


def log_dataset_built(logger: logging.Logger, rho: float, total: int, head: int, tail: int):
    """Loga a construção do split long-tailed."""
    logger.info(f"Split LT construído: rho={rho:g}, {total} imagens (N_0={head}, N_min={tail})")


def log_config_loaded(logger: logging.Logger, config_path: str):
    logger.info(f"Configuração carregada de: {config_path}")


def log_report_generated(logger: logging.Logger, report_type: str, file_path: str):
    logger.info(f"Relatório {report_type} gerado: {file_path}")


class LogContext:
    """Cronometra uma etapa e loga início, fim ou falha."""

    def __init__(self, logger: logging.Logger, operation: str, target: str = ""):
        self.logger = logger
        self.operation = operation
        self.suffix = f" para {target}" if target else ""
        self.start_time = None
        self.duration = 0.0

    def __enter__(self):
        self.start_time = datetime.now()
        self.logger.info(f"Iniciando {self.operation}{self.suffix}")
        return self

    def __exit__(self, exc_type, exc_val, exc_tb):
        self.duration = (datetime.now() - self.start_time).total_seconds()
        elapsed = format_duration(self.duration)
        if exc_type is None:
            self.logger.info(f"{self.operation}{self.suffix} concluído em {elapsed}")
        else:
            self.logger.error(f"{self.operation}{self.suffix} falhou após {elapsed}: {exc_val}")
        return False


# Somente console até a CLI reconfigurar
default_logger = setup_logger(capture_warnings=False)
