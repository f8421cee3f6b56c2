"""Order-preserving fan-out of independent solves."""

from __future__ import annotations

import os
from concurrent.futures import ProcessPoolExecutor
from typing import Callable, Iterable, TypeVar

T = TypeVar("T")
R = TypeVar("R")

ENV_VAR = "FUCIK_THREADS"


def worker_count(requested: int | None = None) -> int:
    """Resolve a worker count; ``FUCIK_THREADS`` caps it, 0 means one per CPU."""
    if requested is None:
        raw = os.environ.get(ENV_VAR, "0").strip() or "0"
        try:
            requested = int(raw)
        except ValueError:
            raise ValueError(f"{ENV_VAR} must be an integer, got {raw!r}") from None
    if requested < 0:
        raise ValueError("worker count must be >= 0")
    if requested == 0:
        requested = os.cpu_count() or 1
    return requested


class Failed:
    """Placeholder for an item whose computation raised."""

    __slots__ = ("error",)

    def __init__(self, error: BaseException):
        self.error = error

    def __repr__(self) -> str:
        return f"Failed({self.error!r})"


def _guarded(args):
    fn, item = args
    try:
        return fn(item)
    except Exception as exc:  # reported per item, never raised across the pool
        return Failed(exc)


def fan_out(fn: Callable[[T], R], items: Iterable[T], workers: int | None = None) -> list[R | Failed]:
    """Apply ``fn`` to every item; results come back in input order.

    Exceptions are captured as :class:`Failed` so one bad item does not sink
    the batch.  Each item is computed in isolation, so the output does not
    depend on scheduling.
    """
    items = list(items)
    n = min(worker_count(workers), len(items))
    if n <= 1:
        return [_guarded((fn, it)) for it in items]
    with ProcessPoolExecutor(max_workers=n) as pool:
        return list(pool.map(_guarded, [(fn, it) for it in items]))
