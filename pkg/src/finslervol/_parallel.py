"""Thread-pool map capped by ``FINSLERVOL_THREADS``; results keep input order."""
from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor


def thread_count() -> int:
    raw = os.environ.get("FINSLERVOL_THREADS", "")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def pmap(func, items):
    items = list(items)
    workers = min(thread_count(), len(items))
    if workers <= 1:
        return [func(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(func, items))
