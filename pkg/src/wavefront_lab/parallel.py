"""Thread fan-out for independent rows (speed sweeps, seeds)."""

import os
from concurrent.futures import ThreadPoolExecutor

ENV_THREADS = "WAVEFRONT_LAB_THREADS"


def thread_count():
    raw = os.environ.get(ENV_THREADS, "")
    try:
        n = int(raw)
    except ValueError:
        n = os.cpu_count() or 1
    return max(1, n)


def pmap(fn, items):
    """``[fn(x) for x in items]``, evaluated on up to :func:`thread_count` threads.

    Order is preserved, so outputs are deterministic regardless of scheduling.
    """
    items = list(items)
    n = min(thread_count(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
