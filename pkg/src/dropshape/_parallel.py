"""Ordered thread-pool map with a process-wide thread cap."""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor

ENV_VAR = "DROPSHAPE_THREADS"
_threads = None


def resolve_threads(requested=None):
    """``requested`` if given, else ``$DROPSHAPE_THREADS``, else the CPU count."""
    if requested is None:
        env = os.environ.get(ENV_VAR, "").strip()
        requested = int(env) if env else (os.cpu_count() or 1)
    n = int(requested)
    if n < 1:
        raise ValueError("thread count must be at least 1")
    return n


def set_threads(n):
    global _threads
    _threads = resolve_threads(n)


def get_threads():
    return _threads if _threads is not None else resolve_threads()


def pmap(fn, items, threads=None):
    """``[fn(x) for x in items]`` evaluated on up to ``threads`` workers.

    Results come back in input order, so any reduction done by the caller
    is independent of the thread count.
    """
    items = list(items)
    n = min(threads or get_threads(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
