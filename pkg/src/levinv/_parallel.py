"""Chunked per-row evaluation with a fixed-shape reduction tree.

Chunk boundaries depend only on the problem size, never on the thread
count, so a threaded run sums the same partial results in the same order
as a sequential one.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

ENV_VAR = "LEVINV_THREADS"
CHUNK_ROWS = 64


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        env = os.environ.get(ENV_VAR)
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


def chunks(n: int, size: int = CHUNK_ROWS) -> list[range]:
    return [range(k, min(k + size, n)) for k in range(0, n, size)]


def tree_sum(parts):
    """Pairwise reduction in a fixed order."""
    parts = list(parts)
    if not parts:
        raise ValueError("nothing to reduce")
    while len(parts) > 1:
        nxt = [parts[k] + parts[k + 1] for k in range(0, len(parts) - 1, 2)]
        if len(parts) % 2:
            nxt.append(parts[-1])
        parts = nxt
    return parts[0]


def map_chunks(fn, n: int, threads: int = 1, size: int = CHUNK_ROWS):
    blocks = chunks(n, size)
    if threads <= 1 or len(blocks) == 1:
        return [fn(blk) for blk in blocks]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, blocks))
