"""Deadline and iteration-quota bookkeeping shared by all solver phases."""

from __future__ import annotations

import time
from typing import Callable, Optional

_stop_requested = False


def request_stop() -> None:
    """Ask every running search loop to wind down (signal-handler safe)."""
    global _stop_requested
    _stop_requested = True


def clear_stop() -> None:
    global _stop_requested
    _stop_requested = False


def stop_requested() -> bool:
    return _stop_requested


class BudgetExceeded(Exception):
    """Raised by exact code paths that cannot finish within their budget."""


class Budget:
    """A wall-clock deadline plus an optional iteration quota.

    ``seconds=None`` means no time limit. ``iterations`` caps the number of
    restart iterations a local search may run; tests use it instead of the
    clock so that results are reproducible.
    """

    def __init__(
        self,
        seconds: Optional[float] = None,
        iterations: Optional[int] = None,
        clock: Callable[[], float] = time.monotonic,
    ):
        if seconds is not None and seconds < 0:
            raise ValueError("budget seconds must be nonnegative")
        if iterations is not None and iterations < 0:
            raise ValueError("iteration quota must be nonnegative")
        self.clock = clock
        self.start = clock()
        self.deadline = None if seconds is None else self.start + seconds
        self.iterations = iterations

    @classmethod
    def unlimited(cls) -> "Budget":
        return cls()

    def remaining(self) -> float:
        if self.deadline is None:
            return float("inf")
        return max(0.0, self.deadline - self.clock())

    def expired(self) -> bool:
        if _stop_requested:
            return True
        return self.deadline is not None and self.clock() >= self.deadline

    def elapsed(self) -> float:
        return self.clock() - self.start

    def slice(
        self,
        fraction: float = 1.0,
        cap: Optional[float] = None,
        iterations: Optional[int] = None,
    ) -> "Budget":
        """Sub-budget covering ``fraction`` of the remaining time (at most ``cap`` s)."""
        if self.deadline is None:
            seconds = cap
        else:
            seconds = self.remaining() * fraction
            if cap is not None:
                seconds = min(seconds, cap)
        quota = self.iterations if iterations is None else iterations
        if self.iterations is not None and iterations is not None:
            quota = min(self.iterations, iterations)
        return Budget(seconds, quota, self.clock)
