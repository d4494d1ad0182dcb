"""Seeded random streams.

Every stream is addressed by ``(seed, *key)``, so any piece of a batch can
be regenerated independently of how the work was scheduled.
"""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Sequence

import numpy as np

DEFAULT_SEED = 20190417
BLOCK_SIZE = 1024


def stream(seed: int, *key: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed, spawn_key=tuple(key))))


def as_generator(seed: int | np.random.Generator, *key: int) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return stream(seed, *key)


def blocks(count: int, size: int = BLOCK_SIZE) -> list[tuple[int, int, int]]:
    """Split ``count`` draws into ``(block index, start, length)`` pieces."""
    return [(b, start, min(size, count - start)) for b, start in enumerate(range(0, count, size))]


def resolve_threads(threads: int | None) -> int:
    if threads is None:
        threads = int(os.environ.get("RELIPOP_THREADS", "1"))
    return max(1, threads)


def run_tasks(fn: Callable, tasks: Sequence[tuple], threads: int = 1) -> list:
    """Apply ``fn`` to every argument tuple, preserving order."""
    if threads <= 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, *zip(*tasks)))
