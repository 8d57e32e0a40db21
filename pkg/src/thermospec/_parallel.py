"""Order-preserving parallel map used for cylinder sums.

The worker count comes from ``THERMOSPEC_THREADS`` (default 1). Results are
returned in input order, so reductions downstream do not depend on it.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")

ENV_VAR = "THERMOSPEC_THREADS"


def thread_count() -> int:
    raw = os.environ.get(ENV_VAR, "1")
    try:
        return max(1, int(raw))
    except ValueError:
        raise ValueError(f"{ENV_VAR} must be a positive integer, got {raw!r}") from None


def ordered_map(fn: Callable[[T], R], items: Iterable[T]) -> list[R]:
    workers = thread_count()
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))
