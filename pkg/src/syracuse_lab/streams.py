"""Seeded random substreams and thread-count-independent block execution.

Every Monte Carlo routine splits its sample count into fixed-size blocks.
Block ``i`` always draws from the PCG64 stream keyed by ``(seed, *key, i)``
so results are identical whatever the number of worker threads.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Sequence, TypeVar

import numpy as np

T = TypeVar("T")

DEFAULT_BLOCK = 1 << 14
MASK64 = (1 << 64) - 1


def substream(seed: int, *key: int) -> np.random.Generator:
    """Independent generator for the (seed, key...) stream."""
    if not 0 <= seed <= MASK64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    ss = np.random.SeedSequence(seed, spawn_key=tuple(int(k) for k in key))
    return np.random.Generator(np.random.PCG64(ss))


def block_sizes(total: int, block: int = DEFAULT_BLOCK) -> list[int]:
    full, rest = divmod(total, block)
    return [block] * full + ([rest] if rest else [])


def run_blocks(
    fn: Callable[[np.random.Generator, int], T],
    total: int,
    seed: int,
    key: Sequence[int] = (),
    threads: int = 1,
    block: int = DEFAULT_BLOCK,
) -> list[T]:
    """Call ``fn(rng, size)`` once per block; results come back in block order."""
    sizes = block_sizes(total, block)
    jobs = [(substream(seed, *key, i), size) for i, size in enumerate(sizes)]
    if threads <= 1 or len(jobs) <= 1:
        return [fn(rng, size) for rng, size in jobs]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda job: fn(*job), jobs))
