"""Testes do logger: arquivo sem cores, áreas e cronômetro de etapas."""

import logging
import warnings

import pytest

from src.utils.logger import ColoredFormatter, LogContext, default_log_file, setup_logger


def read_log(logger: logging.Logger, path) -> str:
    for handler in logger.handlers:
        handler.flush()
    return path.read_text(encoding="utf-8")


@pytest.fixture
def file_logger(tmp_path):
    path = tmp_path / "logs" / "run.log"
    logger = setup_logger(name="deit_lt_teste", level="DEBUG", log_file=path, use_colors=True)
    yield logger, path
    for handler in logger.handlers[:]:
        logger.removeHandler(handler)
        handler.close()
    logging.captureWarnings(False)
    for handler in logging.getLogger("py.warnings").handlers[:]:
        logging.getLogger("py.warnings").removeHandler(handler)
        handler.close()


class TestSetupLogger:
    def test_file_has_no_ansi_codes(self, file_logger):
        logger, path = file_logger
        logger.getChild("training").info("época 1")
        text = read_log(logger, path)
        assert "deit_lt_teste.training - INFO - " in text
        assert "\033[" not in text

    def test_reconfiguring_replaces_handlers(self, file_logger, tmp_path):
        logger, _ = file_logger
        again = setup_logger(name="deit_lt_teste", log_file=tmp_path / "outro.log")
        assert again is logger
        assert len(logger.handlers) == 2
        assert not logger.propagate

    def test_numpy_warnings_reach_the_file(self, file_logger):
        logger, path = file_logger
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            logging.captureWarnings(True)
            warnings.warn("overflow encountered in exp", RuntimeWarning)
        text = read_log(logging.getLogger("py.warnings"), path)
        assert "overflow encountered in exp" in text

    def test_default_log_file_lives_under_out_dir(self, tmp_path):
        path = default_log_file(tmp_path)
        assert path.parent == tmp_path / "logs"
        assert path.name.startswith("deit_lt_") and path.suffix == ".log"


class TestColoredFormatter:
    def test_colors_level_and_area_without_touching_record(self):
        record = logging.LogRecord("deit_lt.data", logging.WARNING, __file__, 1, "msg", None, None)
        text = ColoredFormatter("%(name)s %(levelname)s %(message)s").format(record)
        assert "\033[33mWARNING\033[0m" in text
        assert text.startswith("deit_lt.\033[34mdata\033[0m")
        assert record.levelname == "WARNING" and record.name == "deit_lt.data"


class TestLogContext:
    def test_success_and_failure_messages(self, file_logger):
        logger, path = file_logger
        with LogContext(logger, "Treino", "2 épocas") as ctx:
            pass
        assert ctx.duration >= 0.0
        with pytest.raises(ValueError):
            with LogContext(logger, "Avaliação"):
                raise ValueError("sem dados")
        text = read_log(logger, path)
        assert "Iniciando Treino para 2 épocas" in text
        assert "Treino para 2 épocas concluído em" in text
        assert "Avaliação falhou após" in text and "sem dados" in text
