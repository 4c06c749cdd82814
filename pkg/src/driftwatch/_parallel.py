"""Deterministic chunked execution, optionally across worker processes.

Replicate-level randomness always comes from per-replicate substreams, so
splitting work across chunks or processes cannot change any result; workers
only buy wall-clock time.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor


def chunk_bounds(n: int, chunk: int) -> list[tuple[int, int]]:
    return [(a, min(a + chunk, n)) for a in range(0, n, chunk)]


def run_chunked(worker, payloads, jobs: int = 1) -> list:
    """Apply ``worker`` to each payload, in order; fan out when jobs > 1."""
    if jobs is None or jobs <= 1 or len(payloads) <= 1:
        return [worker(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(worker, payloads))
