"""Deterministic-merge parallel map over independent shooting tasks.

Sweeps are embarrassingly parallel; outputs are returned in input order so
results never depend on scheduling.  The MEANFIELD_THREADS environment
variable caps the worker count (default: available parallelism).
"""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor

__all__ = ["resolve_workers", "ordered_map"]

ENV_VAR = "MEANFIELD_THREADS"


def resolve_workers(max_workers: int | None = None) -> int:
    cap = os.environ.get(ENV_VAR)
    if max_workers is None:
        max_workers = os.cpu_count() or 1
    if cap is not None:
        try:
            max_workers = min(max_workers, max(1, int(cap)))
        except ValueError:
            raise ValueError("%s must be an integer, got %r" % (ENV_VAR, cap))
    return max(1, max_workers)


def ordered_map(fn, items, max_workers: int | None = None) -> list:
    """map(fn, items) preserving order, optionally across processes."""
    items = list(items)
    workers = resolve_workers(max_workers)
    if workers <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    chunk = max(1, len(items) // (8 * workers))
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items, chunksize=chunk))
