"""Order-preserving worker pool used by sweeps."""
from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor


def resolve_jobs(jobs: int | None = None) -> int:
    env = os.environ.get("DPNLS_JOBS")
    if env:
        return max(1, int(env))
    return max(1, int(jobs or 1))


def pmap(fn, items, jobs: int | None = 1) -> list:
    """``[fn(x) for x in items]``, optionally across processes; order is kept."""
    items = list(items)
    n = resolve_jobs(jobs)
    if n == 1 or len(items) < 2:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=n) as ex:
        return list(ex.map(fn, items))
