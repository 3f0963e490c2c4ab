"""Small shared helpers."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

_THREADS_ENV = "RYDCAV_THREADS"


def worker_count() -> int:
    """Worker cap for parallel sweeps, from the RYDCAV_THREADS env var."""
    raw = os.environ.get(_THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


def parallel_map(fn, items):
    """Map preserving order; runs in a thread pool when workers > 1."""
    items = list(items)
    n = worker_count()
    if n <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=min(n, len(items))) as pool:
        return list(pool.map(fn, items))
