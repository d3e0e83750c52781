"""Accumulated-time stop watch for dispute timeouts.

Instead of a per-step timelock, each party carries one watch that runs while
it is their turn to respond.  Elapsed intervals are committed write-once
(modeling one-time signatures) and summed; when the total exceeds the
censorship-resistance threshold the party's enablers become burnable.

Interval marker outputs use power-of-two denominations, so any elapsed time
in an open interval is provable with at most log2(t) markers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

from .errors import AlreadyRunning, CommitImmutable, NotMatured, NotRunning


@dataclass
class IntervalMarker:
    duration: int  # matured timelock, in ticks
    mined_at: int


@dataclass
class StopWatch:
    party: str
    threshold: int
    intervals: tuple[int, ...] = ()
    running_since: Optional[int] = None
    markers: list[IntervalMarker] = field(default_factory=list)

    @property
    def running(self) -> bool:
        return self.running_since is not None

    def accumulated(self, now: Optional[int] = None) -> int:
        total = sum(self.intervals)
        if self.running:
            if now is None:
                raise ValueError("now required while running")
            total += now - self.running_since
        return total

    def start(self, now: int) -> None:
        if self.running:
            raise AlreadyRunning(self.party)
        self.running_since = now
        self.markers = []

    def stop(self, now: int) -> None:
        if not self.running:
            raise NotRunning(self.party)
        self.commit_interval(now - self.running_since)
        self.running_since = None

    def commit_interval(self, duration: int) -> None:
        # write-once: appending is the only mutation; see rewrite_interval
        self.intervals = self.intervals + (duration,)

    def rewrite_interval(self, index: int, duration: int) -> None:
        """Committed intervals are one-time-signed; rewriting always fails."""
        raise CommitImmutable(f"interval {index} of {self.party}")

    def minable_markers(self, now: int) -> list[int]:
        """Power-of-two durations provable in the current open interval."""
        if not self.running:
            return []
        elapsed = now - self.running_since
        out, d = [], 1
        while d <= elapsed:
            out.append(d)
            d *= 2
        return out

    def mine_interval_marker(self, duration: int, now: int) -> IntervalMarker:
        if not self.running:
            raise NotRunning(self.party)
        if now - self.running_since < duration:
            raise NotMatured(f"{duration} > elapsed")
        marker = IntervalMarker(duration, now)
        self.markers.append(marker)
        return marker

    def aggregate_timeout(self, now: Optional[int] = None) -> bool:
        """True once total measured time exceeds the threshold."""
        return self.accumulated(now) > self.threshold
