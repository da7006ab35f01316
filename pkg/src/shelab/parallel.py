"""Deterministic replica fan-out.

Workers never share state: each replica derives its own noise seed and
returns plain data, and results are reassembled in replica order, so the
output is identical for any worker count.
"""

from __future__ import annotations

from concurrent.futures import ProcessPoolExecutor


def replica_map(fn, payloads: list, workers: int = 1) -> list:
    """Apply fn to each payload, preserving order; fn must be a module-level
    function when workers > 1 (pickling)."""
    if workers <= 1 or len(payloads) <= 1:
        return [fn(p) for p in payloads]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, payloads, chunksize=max(1, len(payloads) // (4 * workers))))
