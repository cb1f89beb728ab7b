"""
Order-preserving parallel map over independent fibers.
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, List, Optional, TypeVar

T = TypeVar("T")
R = TypeVar("R")

_default_threads = 1


def set_default_threads(threads: int) -> None:
    """Set the worker count used when callers pass threads=None."""
    global _default_threads
    _default_threads = max(1, int(threads))


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: Optional[int] = None) -> List[R]:
    """Map fn over items; numpy/scipy kernels release the GIL so threads scale."""
    items = list(items)
    workers = _default_threads if threads is None else max(1, int(threads))
    if workers == 1 or len(items) < 2:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=min(workers, len(items))) as pool:
        return list(pool.map(fn, items))
