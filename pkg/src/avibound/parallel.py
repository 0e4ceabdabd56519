"""Order-preserving parallel map for sampling loops.

Samples carry their own derived seeds, so results are independent of
execution order; reductions stay deterministic because the output order is
the input order.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def pmap(fn, items, threads: int = 1) -> list:
    items = list(items)
    if threads == 0:
        threads = os.cpu_count() or 1
    if threads <= 1 or len(items) <= 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))
