import os
from concurrent.futures import ThreadPoolExecutor


def max_workers():
    """Worker cap from SEMICLASSIC_THREADS, else the CPU count."""
    raw = os.environ.get("SEMICLASSIC_THREADS", "").strip()
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            pass
    return os.cpu_count() or 1


def pmap(fn, items):
    items = list(items)
    workers = min(max_workers(), len(items))
    if workers <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items))
