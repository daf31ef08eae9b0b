"""
Deterministic chunked Monte Carlo.

Draws are split into fixed-size chunks. Chunk k of stream s under seed n gets
its own counter-based generator (Philox) keyed by SeedSequence(n, spawn_key=(s, k)),
so a result only depends on (seed, stream, n_samples, chunk_size), never on
how many workers evaluate the chunks.
"""
from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, TypeVar

import numpy as np

from constants import MC_CHUNK_SIZE
from errors import DomainError

T = TypeVar("T")

STREAM_TRANSITION = 1
STREAM_FADING = 2
STREAM_VALIDATION = 3


def chunk_sizes(n_samples: int, chunk_size: int = MC_CHUNK_SIZE) -> list[int]:
    if n_samples < 0 or chunk_size < 1:
        raise DomainError(f"bad chunking: n_samples={n_samples}, chunk_size={chunk_size}")
    full, rest = divmod(n_samples, chunk_size)
    return [chunk_size] * full + ([rest] if rest else [])


def chunk_generator(seed: int, stream: int, index: int) -> np.random.Generator:
    sequence = np.random.SeedSequence(seed, spawn_key=(stream, index))
    return np.random.Generator(np.random.Philox(sequence))


def map_chunks(
    func: Callable[[np.random.Generator, int], T],
    n_samples: int,
    seed: int,
    stream: int,
    workers: int = 1,
    chunk_size: int = MC_CHUNK_SIZE,
) -> list[T]:
    """
    Evaluate func(rng, size) on every chunk and return the results in chunk order.

    :complexity: O(n_samples) work, spread over `workers` threads.
    """
    if seed < 0:
        raise DomainError(f"seed must be nonnegative, got {seed}")
    tasks = list(enumerate(chunk_sizes(n_samples, chunk_size)))

    def run(task: tuple[int, int]) -> T:
        index, size = task
        return func(chunk_generator(seed, stream, index), size)

    if workers <= 1 or len(tasks) <= 1:
        return [run(task) for task in tasks]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, tasks))
