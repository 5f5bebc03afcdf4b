"""Sharded execution over fixed-size sample blocks.

Samples are cut into blocks of ``BLOCK_SIZE``; block ``b`` always draws from
``XiStream(seed, b)``.  Shards take contiguous runs of blocks, and results are
returned in block order, so any reduction over them is independent of the
shard count.
"""
from __future__ import annotations

import multiprocessing
import os
from concurrent.futures import ProcessPoolExecutor
from functools import partial

from .ensemble import XiStream

BLOCK_SIZE = 256
SHARDS_ENV = "DETSQUARE_SHARDS"


def default_shards() -> int:
    env = os.environ.get(SHARDS_ENV)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def block_sizes(samples: int, block_size: int = BLOCK_SIZE) -> list[int]:
    full, rest = divmod(samples, block_size)
    return [block_size] * full + ([rest] if rest else [])


def _run_span(fn, seed, span):
    return [fn(XiStream(seed, b), count) for b, count in span]


def run_blocks(fn, samples: int, seed: int, shards: int = 1, block_size: int = BLOCK_SIZE, **kwargs) -> list:
    """Apply ``fn(stream, count, **kwargs)`` to every block; results in block order.

    ``fn`` must be a module-level function when ``shards > 1``.
    """
    if samples < 1:
        raise ValueError("need at least one sample")
    work = list(enumerate(block_sizes(samples, block_size)))
    task = partial(fn, **kwargs)
    shards = max(1, min(shards, len(work)))
    if shards == 1:
        return _run_span(task, seed, work)
    step = -(-len(work) // shards)
    spans = [work[i : i + step] for i in range(0, len(work), step)]
    ctx = multiprocessing.get_context("fork") if "fork" in multiprocessing.get_all_start_methods() else None
    with ProcessPoolExecutor(max_workers=len(spans), mp_context=ctx) as pool:
        parts = pool.map(partial(_run_span, task, seed), spans)
        return [r for part in parts for r in part]
