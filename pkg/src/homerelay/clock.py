"""Injectable time source.

Every timestamp in the system (command times, auto-off deadlines, trace
and log records) comes from a Clock handed to the service at startup.
``SystemClock`` is the real thing; ``FakeClock`` lets a test or demo walk
a 30-minute scenario in milliseconds.
"""

from __future__ import annotations

import time


class Clock:
    def now(self) -> float:
        """Current time as seconds since the Unix epoch, UTC."""
        raise NotImplementedError


class SystemClock(Clock):
    def now(self) -> float:
        return time.time()


class FakeClock(Clock):
    """Manually advanced clock. Time never moves backwards."""

    def __init__(self, start: float = 0.0) -> None:
        self._now = float(start)

    def now(self) -> float:
        return self._now

    def set(self, t: float) -> None:
        if t < self._now:
            raise ValueError(f"clock cannot move backwards ({t} < {self._now})")
        self._now = float(t)

    def advance(self, seconds: float) -> None:
        self.set(self._now + seconds)
