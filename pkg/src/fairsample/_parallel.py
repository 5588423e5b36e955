"""Process-pool map with deterministic result ordering."""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor


def pmap(fn, payloads, jobs: int = 1):
    """Map fn over payloads, in order; jobs > 1 uses worker processes.

    Every payload carries its own derived seed, so the result is identical
    for any degree of parallelism.
    """
    payloads = list(payloads)
    if jobs <= 1 or len(payloads) <= 1:
        return [fn(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, payloads))
