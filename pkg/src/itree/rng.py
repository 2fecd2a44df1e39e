"""Seeded, splittable random streams for event generation.

Events are generated in fixed blocks of ``BLOCK_SIZE``. Block ``k`` draws from
a Philox (counter-based) generator keyed by ``SeedSequence(seed, spawn_key=(k,))``,
so the stream of an event depends only on ``(seed, event index)`` and never on
how blocks are scheduled across threads.

Each event owns one row of ``N + 1`` uniforms in ``[0, 1)``: columns ``0..N-1``
are the per-step draws, column ``N`` is the final spin draw.
"""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable

import numpy as np

from .outcomes import Events

BLOCK_SIZE = 4096
THREADS_ENV = "ITREE_THREADS"


def block_generator(seed: int, block: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(seed, spawn_key=(block,))))


def event_draws(seed: int, block: int, n_events: int, n_steps: int) -> np.ndarray:
    return block_generator(seed, block).random((n_events, n_steps + 1))


def draws_for(seed: int, n_events: int, n_steps: int) -> np.ndarray:
    """All draw rows for events ``0..n_events-1``, concatenated across blocks."""
    rows = [
        event_draws(seed, k, min(BLOCK_SIZE, n_events - start), n_steps)
        for k, start in enumerate(range(0, n_events, BLOCK_SIZE))
    ]
    if not rows:
        return np.zeros((0, n_steps + 1))
    return np.concatenate(rows)


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "1") or 1)
    return max(1, int(threads))


def run_blocks(
    sample_block: Callable[[np.ndarray], Events],
    n_events: int,
    n_steps: int,
    seed: int,
    threads: int | None = None,
) -> Events:
    """Apply ``sample_block`` to each block of draws and concatenate in event order."""
    starts = list(range(0, n_events, BLOCK_SIZE))

    def work(k: int) -> Events:
        size = min(BLOCK_SIZE, n_events - starts[k])
        return sample_block(event_draws(seed, k, size, n_steps))

    threads = resolve_threads(threads)
    if threads == 1 or len(starts) <= 1:
        parts = [work(k) for k in range(len(starts))]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(work, range(len(starts))))
    return Events.concat(parts, n_steps)
