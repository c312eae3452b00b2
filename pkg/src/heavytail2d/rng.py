"""Counter-based uniform streams.

Every block of draws is addressed by ``(seed, stream, chunk)`` and produced by
a Philox generator keyed from that triple, so the values of a given path never
depend on how many workers run or in which order chunks are evaluated.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

import numpy as np

CHUNK = 1 << 16

# Disjoint substreams: claims and weights must never share draws.
STREAM_CLAIMS = 0
STREAM_WEIGHTS = 1
STREAM_AUX = 2

_SCALE = 2.0 ** -53

T = TypeVar("T")


def uniforms(seed: int, stream: int, chunk: int, rows: int, cols: int = 1) -> np.ndarray:
    """Open-interval uniforms for one chunk, shape ``(rows, cols)``.

    Values lie in (0, 1) strictly, so inverse-tail transforms never see 0 or 1.
    """
    if seed < 0:
        raise ValueError("seed must be non-negative")
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(chunk)))
    raw = np.random.Philox(ss).random_raw(rows * cols)
    u = ((raw >> np.uint64(11)).astype(np.float64) + 0.5) * _SCALE
    return u.reshape(rows, cols)


def chunk_sizes(m: int, chunk: int = CHUNK) -> list[int]:
    if m < 1:
        raise ValueError("sample count must be >= 1")
    full, rest = divmod(m, chunk)
    return [chunk] * full + ([rest] if rest else [])


def uniform_block(seed: int, stream: int, m: int, cols: int = 1) -> np.ndarray:
    """All ``m`` rows of a stream, concatenated in chunk order."""
    parts = [uniforms(seed, stream, c, r, cols) for c, r in enumerate(chunk_sizes(m))]
    return np.concatenate(parts, axis=0)


def worker_count(workers: int | None = None) -> int:
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get("HEAVYTAIL2D_THREADS")
    if env:
        return max(1, int(env))
    return max(1, os.cpu_count() or 1)


def map_chunks(fn: Callable[[int, int], T], m: int, workers: int | None = None) -> list[T]:
    """Evaluate ``fn(chunk_index, rows)`` for every chunk; results in chunk order."""
    sizes = chunk_sizes(m)
    w = worker_count(workers)
    if w == 1 or len(sizes) == 1:
        return [fn(c, r) for c, r in enumerate(sizes)]
    with ThreadPoolExecutor(max_workers=w) as pool:
        return list(pool.map(fn, range(len(sizes)), sizes))


def ordered_sum(parts: Iterable[np.ndarray]) -> np.ndarray:
    total = None
    for p in parts:
        total = np.array(p, dtype=np.float64) if total is None else total + p
    return total
