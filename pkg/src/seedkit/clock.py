"""Budget clocks.

Simulated targets report a modeled cost per run, and a :class:`VirtualClock`
advances by exactly that cost; the resulting elapsed times are reproducible
bit for bit. External targets use real monotonic time.
"""

import time


class WallClock:
    def __init__(self):
        self._start = time.monotonic()

    def elapsed(self) -> float:
        return time.monotonic() - self._start

    def charge(self, outcome) -> None:
        pass


class VirtualClock:
    def __init__(self):
        self._ns = 0

    def elapsed(self) -> float:
        return self._ns / 1e9

    @property
    def elapsed_ns(self) -> int:
        return self._ns

    def charge(self, outcome) -> None:
        self._ns += round(outcome.wall_time * 1e9)


def clock_for(target):
    from .oracle import is_simulated

    return VirtualClock() if is_simulated(target) else WallClock()
