from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")


def resolve_threads(threads: int | None = None) -> int:
    """Explicit value, then $SSWALK_THREADS, then the core count."""
    if threads is None:
        env = os.environ.get("SSWALK_THREADS")
        try:
            threads = int(env) if env else (os.cpu_count() or 1)
        except ValueError:
            raise ValueError(f"SSWALK_THREADS must be an integer, got {env!r}") from None
    if threads < 1:
        raise ValueError(f"thread count must be positive, got {threads}")
    return threads


def parallel_map(fn: Callable[[T], R], items: Iterable[T], threads: int | None = None) -> list[R]:
    """Map ``fn`` over ``items`` on a thread pool; results keep input order."""
    items = list(items)
    n = min(resolve_threads(threads), max(len(items), 1))
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))
