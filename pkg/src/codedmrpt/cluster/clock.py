from __future__ import annotations


class VirtualClock:
    """
    Simulated time in virtual seconds.

    Only the master advances the clock, from worker completion times taken out
    of the trace, so the reading never depends on physical scheduling.
    """

    def __init__(self, start: float = 0.0) -> None:
        self._now = float(start)

    @property
    def now(self) -> float:
        return self._now

    def advance_to(self, t: float) -> None:
        if t < self._now:
            raise ValueError(f"cannot go back in time: {t} < {self._now}")
        self._now = float(t)

    def advance_by(self, dt: float) -> None:
        self.advance_to(self._now + dt)
