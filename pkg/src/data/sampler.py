"""Ordem de amostragem por época e carregador de lotes com workers."""

import logging
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterator, List, Optional

import numpy as np

from ..exceptions import ParameterError
from ..models.dataset import RawBatch
from ..utils.seeding import epoch_rng

logger = logging.getLogger("deit_lt.data")


class ClassBalancedSampler:
    """Sorteia a classe uniformemente e depois uma imagem dela (usado no cRT)."""

    def __init__(self, labels: np.ndarray, num_classes: int):
        self.labels = np.asarray(labels, dtype=np.int64)
        self.num_classes = num_classes
        self.by_class: List[np.ndarray] = [np.flatnonzero(self.labels == c) for c in range(num_classes)]
        empty = [c for c, idx in enumerate(self.by_class) if len(idx) == 0]
        if empty:
            raise ParameterError("labels", f"classes sem amostras: {empty}")

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        classes = rng.integers(0, self.num_classes, size=n)
        picks = np.empty(n, dtype=np.int64)
        for c in range(self.num_classes):
            slots = np.flatnonzero(classes == c)
            if len(slots):
                picks[slots] = self.by_class[c][rng.integers(0, len(self.by_class[c]), size=len(slots))]
        return picks


class BatchLoader:
    """
    Itera os lotes de uma época, na ordem, preparando-os em threads.

    A ordem vem de `epoch_rng(order_seed, epoch)` e cada lote carrega a
    semente (augment_seed, epoch, índice); o resultado não depende de
    `workers`. Com `workers == 1` tudo roda na thread chamadora.
    """

    def __init__(self, images: np.ndarray, labels: np.ndarray, batch_size: int,
                 order_seed: int, augment_seed: int, epoch: int,
                 prepare: Optional[Callable[[RawBatch], object]] = None,
                 workers: int = 1, prefetch: int = 2,
                 sampler: Optional[ClassBalancedSampler] = None,
                 shuffle: bool = True):
        self.images = images
        self.labels = np.asarray(labels, dtype=np.int64)
        self.batch_size = batch_size
        self.order_seed = order_seed
        self.augment_seed = augment_seed
        self.epoch = epoch
        self.prepare = prepare
        self.workers = max(1, workers)
        self.prefetch = max(1, prefetch)
        self.sampler = sampler
        self.shuffle = shuffle

    def indices(self) -> np.ndarray:
        n = len(self.labels)
        if self.sampler is not None:
            return self.sampler.sample(n, epoch_rng(self.order_seed, self.epoch))
        if not self.shuffle:
            return np.arange(n)
        return epoch_rng(self.order_seed, self.epoch).permutation(n)

    def __len__(self) -> int:
        return -(-len(self.labels) // self.batch_size)

    def raw_batches(self) -> Iterator[RawBatch]:
        order = self.indices()
        for b, start in enumerate(range(0, len(order), self.batch_size)):
            idx = order[start:start + self.batch_size]
            yield RawBatch(
                images=self.images[idx],
                labels=self.labels[idx],
                seed=(self.augment_seed, self.epoch, b),
                index=b,
            )

    def __iter__(self):
        prepare = self.prepare or (lambda batch: batch)
        if self.workers == 1:
            for batch in self.raw_batches():
                yield prepare(batch)
            return

        # Fila limitada: no máximo workers * prefetch lotes em voo
        limit = self.workers * self.prefetch
        with ThreadPoolExecutor(max_workers=self.workers, thread_name_prefix="deit_lt-data") as pool:
            pending = deque()
            for batch in self.raw_batches():
                pending.append(pool.submit(prepare, batch))
                if len(pending) >= limit:
                    yield pending.popleft().result()
            while pending:
                yield pending.popleft().result()
