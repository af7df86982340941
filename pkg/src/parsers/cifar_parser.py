"""Parser para o formato binário do CIFAR-10."""

import logging
from pathlib import Path
from typing import Tuple

import numpy as np

from ..exceptions import DataFormatError
from ..models.dataset import RawDataset

logger = logging.getLogger("deit_lt.parsers")

TRAIN_FILES = [f"data_batch_{i}.bin" for i in range(1, 6)]
TEST_FILE = "test_batch.bin"


class CifarBinaryParser:
    """
    Parser para registros CIFAR-10 de 3073 bytes.

    Cada registro tem 1 byte de rótulo seguido de 3072 bytes de pixels:
    plano R, depois G, depois B, cada um 32x32 em ordem de linha.
    """

    IMAGE_SIZE = 32
    CHANNELS = 3
    RECORD_SIZE = 1 + CHANNELS * IMAGE_SIZE * IMAGE_SIZE

    def __init__(self, num_classes: int = 10):
        self.num_classes = num_classes

    def parse(self, payload: bytes, source: str = "<bytes>") -> Tuple[np.ndarray, np.ndarray]:
        """Converte bytes em (imagens [N, 32, 32, 3] uint8, rótulos [N] int64)."""
        if len(payload) % self.RECORD_SIZE != 0:
            raise DataFormatError(
                source,
                f"tamanho {len(payload)} não é múltiplo de {self.RECORD_SIZE}"
            )
        records = np.frombuffer(payload, dtype=np.uint8).reshape(-1, self.RECORD_SIZE)
        labels = records[:, 0].astype(np.int64)
        invalid = labels >= self.num_classes
        if invalid.any():
            index = int(np.argmax(invalid))
            raise DataFormatError(
                source,
                f"registro {index} com rótulo {labels[index]} >= {self.num_classes}"
            )
        images = records[:, 1:].reshape(-1, self.CHANNELS, self.IMAGE_SIZE, self.IMAGE_SIZE)
        return np.ascontiguousarray(images.transpose(0, 2, 3, 1)), labels

    def parse_file(self, path) -> Tuple[np.ndarray, np.ndarray]:
        path = Path(path)
        try:
            payload = path.read_bytes()
        except OSError as e:
            raise DataFormatError(str(path), f"não foi possível ler o arquivo: {e}", e)
        images, labels = self.parse(payload, str(path))
        logger.debug(f"{path.name}: {len(labels)} registros")
        return images, labels


def _resolve_root(path: Path) -> Path:
    """Aceita o diretório dos .bin ou o diretório pai do tarball extraído."""
    nested = path / "cifar-10-batches-bin"
    if not (path / TEST_FILE).exists() and (nested / TEST_FILE).exists():
        return nested
    return path


def load_cifar10(path) -> RawDataset:
    """Lê data_batch_1..5.bin e test_batch.bin."""
    root = _resolve_root(Path(path))
    missing = [name for name in TRAIN_FILES + [TEST_FILE] if not (root / name).exists()]
    if missing:
        raise DataFormatError(str(root), f"arquivos ausentes: {', '.join(missing)}")

    parser = CifarBinaryParser(num_classes=10)
    parts = [parser.parse_file(root / name) for name in TRAIN_FILES]
    test_images, test_labels = parser.parse_file(root / TEST_FILE)

    dataset = RawDataset(
        train_images=np.concatenate([images for images, _ in parts]),
        train_labels=np.concatenate([labels for _, labels in parts]),
        test_images=test_images,
        test_labels=test_labels,
        num_classes=10,
        source=str(root),
    )
    logger.info(
        f"CIFAR-10 carregado de {root}: {len(dataset.train_labels)} treino, "
        f"{len(dataset.test_labels)} teste"
    )
    return dataset
