"""Ordered thread-pool map; compiled kernels release the GIL."""
import os
from concurrent.futures import ThreadPoolExecutor

WORKERS_ENV = "LIMITMEASURE_WORKERS"


def n_workers():
    raw = os.environ.get(WORKERS_ENV, "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


def ordered_map(fn, items, workers=None):
    """``[fn(x) for x in items]`` with results in input order regardless of scheduling."""
    items = list(items)
    workers = n_workers() if workers is None else max(1, int(workers))
    if workers == 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as ex:
        return list(ex.map(fn, items))
