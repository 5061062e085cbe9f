"""Ordered chunked evaluation over a thread pool.

Worker count comes from the ``CARNOT_THREADS`` environment variable (default 1).
Chunks are evaluated independently and concatenated in input order, so results
do not depend on the number of workers.
"""

from concurrent.futures import ThreadPoolExecutor
import os

import numpy as np


def worker_count():
    try:
        return max(1, int(os.environ.get("CARNOT_THREADS", "1")))
    except ValueError:
        return 1


def chunked_map(fn, arrays, chunk=1 << 18):
    """Apply ``fn`` to aligned row-slices of ``arrays`` and concatenate the outputs.

    ``fn`` returns an array or a tuple of arrays with the chunk length as the
    leading axis.
    """
    n = arrays[0].shape[0]
    bounds = [(i, min(n, i + chunk)) for i in range(0, n, chunk)] or [(0, 0)]
    work = [tuple(a[lo:hi] for a in arrays) for lo, hi in bounds]
    workers = worker_count()
    if workers > 1 and len(work) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda args: fn(*args), work))
    else:
        parts = [fn(*args) for args in work]
    if isinstance(parts[0], tuple):
        return tuple(np.concatenate([p[j] for p in parts]) for j in range(len(parts[0])))
    return np.concatenate(parts)
