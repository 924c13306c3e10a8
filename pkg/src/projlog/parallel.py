"""Deterministic chunked execution.

Work is split into fixed-size index chunks whose boundaries depend only on
the total size, never on the worker count; results are returned in chunk
order and reduced with numpy's pairwise summation.  Identical inputs
therefore produce bit-identical outputs for any --workers setting.
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from functools import partial

import numpy as np

ENV_WORKERS = "PROJLOG_WORKERS"


def resolve_workers(workers: int | None = None) -> int:
    """Explicit argument, else the PROJLOG_WORKERS env var, else 1."""
    if workers is not None:
        return max(1, int(workers))
    env = os.environ.get(ENV_WORKERS)
    if env:
        return max(1, int(env))
    return 1


def chunk_ranges(total: int, chunk: int) -> list[tuple[int, int]]:
    return [(lo, min(lo + chunk, total)) for lo in range(0, total, chunk)]


def run_chunked(fn, total: int, chunk: int, workers: int = 1, payload=None) -> list:
    """Apply fn to each (lo, hi) chunk range, in chunk order.

    fn must be a module-level callable of (payload, (lo, hi)) when payload is
    given (so it can cross a process boundary), or of ((lo, hi)) otherwise;
    the latter form only runs serially.
    """
    ranges = chunk_ranges(total, chunk)
    if payload is None:
        return [fn(r) for r in ranges]
    if workers <= 1 or len(ranges) <= 1:
        return [fn(payload, r) for r in ranges]
    with ProcessPoolExecutor(max_workers=min(workers, len(ranges))) as ex:
        return list(ex.map(partial(fn, payload), ranges))


def pairwise_sum(values) -> float:
    """Deterministic reduction of partial results (numpy pairwise sum)."""
    return float(np.sum(np.asarray(values, dtype=float)))
