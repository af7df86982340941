"""Fixtures compartilhadas: CIFAR-10 binário sintético e configuração de bancada mínima."""

from pathlib import Path

import numpy as np
import pytest
import yaml

from src.config import TrainConfig
from src.data.longtail import make_longtailed
from src.parsers.cifar_parser import TEST_FILE, TRAIN_FILES, load_cifar10
from src.utils.seeding import derive_seeds

NUM_CLASSES = 10
PER_CLASS_PER_FILE = 2


def cifar_records(labels, rng: np.random.Generator) -> bytes:
    """Registros de 3073 bytes; o brilho médio de cada imagem depende da classe."""
    chunks = []
    for label in labels:
        base = 20 + 22 * int(label)
        image = np.clip(base + rng.integers(-15, 16, size=(3, 32, 32)), 0, 255).astype(np.uint8)
        chunks.append(bytes([int(label)]) + image.tobytes())
    return b"".join(chunks)


def write_cifar_dir(root: Path, per_class: int = PER_CLASS_PER_FILE, seed: int = 0) -> Path:
    rng = np.random.default_rng(seed)
    root.mkdir(parents=True, exist_ok=True)
    labels = np.repeat(np.arange(NUM_CLASSES), per_class)
    for name in TRAIN_FILES + [TEST_FILE]:
        (root / name).write_bytes(cifar_records(rng.permutation(labels), rng))
    return root


def tiny_settings(data_dir: Path, out_dir: Path) -> dict:
    return {
        "dataset": {"kind": "cifar10", "rho": 10.0, "n_max": 10},
        "student_model": {"image_size": 32, "patch_size": 8, "embed_dim": 16, "depth": 2,
                          "n_heads": 2, "mlp_ratio": 2.0},
        "teacher_model": {"blocks_per_stage": 1, "widths": [4, 8, 8]},
        "student": {"epochs": 2, "batch_size": 16, "warmup_epochs": 0, "checkpoint_every": 1},
        "teacher": {"epochs": 2, "batch_size": 16, "warmup_epochs": 0, "checkpoint_every": 1},
        "crt": {"epochs": 1, "batch_size": 16},
        "diagnostics": {"n_samples": 12, "batch_size": 16, "rollout_images": 2},
        "runtime": {"seed": 7, "log_level": "WARNING"},
        "output": {"data_dir": str(data_dir), "out_dir": str(out_dir)},
    }


@pytest.fixture
def cifar_dir(tmp_path) -> Path:
    return write_cifar_dir(tmp_path / "cifar")


@pytest.fixture
def raw_dataset(cifar_dir):
    return load_cifar10(cifar_dir)


@pytest.fixture
def out_dir(tmp_path) -> Path:
    return tmp_path / "runs"


@pytest.fixture
def tiny_config(cifar_dir, out_dir) -> TrainConfig:
    return TrainConfig.from_dict(tiny_settings(cifar_dir, out_dir)).validate()


@pytest.fixture
def config_file(tmp_path, cifar_dir, out_dir) -> Path:
    path = tmp_path / "tiny.yaml"
    path.write_text(yaml.safe_dump(tiny_settings(cifar_dir, out_dir)), encoding="utf-8")
    return path


@pytest.fixture
def seeds(tiny_config):
    return derive_seeds(tiny_config.runtime.seed)


@pytest.fixture
def tiny_dataset(raw_dataset, tiny_config, seeds):
    settings = tiny_config.dataset
    return make_longtailed(raw_dataset, settings.rho, settings.n_max, seeds.split, settings.kind)
