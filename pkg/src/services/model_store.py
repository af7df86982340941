"""Gravação e leitura de checkpoints de professor e estudante."""

import hashlib
import logging
from pathlib import Path
from typing import Any, Dict, Optional, Tuple

import numpy as np

from ..exceptions import CheckpointError
from ..networks.module import Module
from ..networks.resnet import TeacherCNN
from ..networks.vit import DualTokenViT
from ..tensor import load_checkpoint, save_checkpoint

logger = logging.getLogger("deit_lt.checkpoint")

STUDENT_PREFIX = "student."
TEACHER_PREFIX = "teacher."


def _save(path, kind: str, prefix: str, model: Module, header: Dict[str, Any],
          optimizer=None) -> Path:
    entries = model.state_dict(prefix)
    if optimizer is not None:
        entries.update(optimizer.state_entries("optim."))
    full_header = {"kind": kind, "architecture": model.architecture()}
    full_header.update(header)
    return save_checkpoint(path, entries, full_header)


def save_teacher(path, teacher: TeacherCNN, header: Dict[str, Any], optimizer=None) -> Path:
    return _save(path, "teacher", TEACHER_PREFIX, teacher, header, optimizer)


def save_student(path, student: DualTokenViT, header: Dict[str, Any], optimizer=None) -> Path:
    return _save(path, "student", STUDENT_PREFIX, student, header, optimizer)


def read_checkpoint(path, expected_kind: str) -> Tuple[Dict[str, np.ndarray], Dict[str, Any]]:
    entries, header = load_checkpoint(path)
    kind = header.get("kind")
    if kind != expected_kind:
        raise CheckpointError(str(path), f"esperado checkpoint de '{expected_kind}', encontrado '{kind}'")
    if "architecture" not in header:
        raise CheckpointError(str(path), "cabeçalho sem arquitetura")
    return entries, header


def load_teacher(path) -> Tuple[TeacherCNN, Dict[str, Any], Dict[str, np.ndarray]]:
    """Reconstrói o professor pela arquitetura do cabeçalho e carrega os pesos."""
    entries, header = read_checkpoint(path, "teacher")
    teacher = TeacherCNN.from_architecture(header["architecture"], np.random.default_rng(0))
    teacher.load_state_dict(entries, TEACHER_PREFIX, str(path))
    teacher.eval()
    logger.debug(f"Professor carregado de {path} (época {header.get('epoch')})")
    return teacher, header, entries


def load_student(path) -> Tuple[DualTokenViT, Dict[str, Any], Dict[str, np.ndarray]]:
    entries, header = read_checkpoint(path, "student")
    student = DualTokenViT.from_architecture(header["architecture"], np.random.default_rng(0))
    student.load_state_dict(entries, STUDENT_PREFIX, str(path))
    logger.debug(f"Estudante carregado de {path} (época {header.get('epoch')})")
    return student, header, entries


def parameter_digest(model: Module, names: Optional[list] = None) -> str:
    """Hash SHA-256 dos parâmetros (opcionalmente só os nomeados)."""
    sha = hashlib.sha256()
    for name, p in model.named_parameters():
        if names is None or name in names:
            sha.update(name.encode("utf-8"))
            sha.update(np.ascontiguousarray(p.data).tobytes())
    return sha.hexdigest()
