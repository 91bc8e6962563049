"""Discrete-event core: integer-microsecond clock, ordered event queue, seeded streams."""

from __future__ import annotations

import hashlib
import heapq
import random
from typing import Any, Callable

US_PER_S = 1_000_000


class SchedulingError(RuntimeError):
    """Raised when an action is scheduled before the current clock."""


def to_us(seconds: float) -> int:
    return int(round(seconds * US_PER_S))


def to_seconds(us: int) -> float:
    return us / US_PER_S


def format_time(us: int) -> str:
    """Render a microsecond timestamp with six decimals, exactly."""
    return f"{us // US_PER_S}.{us % US_PER_S:06d}"


class Event:
    __slots__ = ("fire_at", "seq", "action", "args", "cancelled")

    def __init__(self, fire_at: int, seq: int, action: Callable[..., Any], args: tuple):
        self.fire_at = fire_at
        self.seq = seq
        self.action = action
        self.args = args
        self.cancelled = False

    def cancel(self) -> None:
        self.cancelled = True

    def __lt__(self, other: "Event") -> bool:
        return (self.fire_at, self.seq) < (other.fire_at, other.seq)


class Simulator:
    """Single-threaded event loop.

    Events at equal times run in the order they were scheduled.
    """

    def __init__(self) -> None:
        self._queue: list[Event] = []
        self._seq = 0
        self._now = 0
        self.executed = 0

    def now(self) -> float:
        return to_seconds(self._now)

    @property
    def now_us(self) -> int:
        return self._now

    def schedule(self, action: Callable[..., Any], at: float, *args: Any) -> Event:
        return self.schedule_us(action, to_us(at), *args)

    def schedule_us(self, action: Callable[..., Any], at_us: int, *args: Any) -> Event:
        if at_us < self._now:
            raise SchedulingError(
                f"cannot schedule at {format_time(at_us)} before now={format_time(self._now)}"
            )
        ev = Event(at_us, self._seq, action, args)
        self._seq += 1
        heapq.heappush(self._queue, ev)
        return ev

    def after_us(self, delay_us: int, action: Callable[..., Any], *args: Any) -> Event:
        return self.schedule_us(action, self._now + delay_us, *args)

    def run_until(self, t_end: float) -> int:
        return self.run_until_us(to_us(t_end))

    def run_until_us(self, end_us: int) -> int:
        if end_us < self._now:
            raise SchedulingError("run_until target lies in the past")
        count = 0
        queue = self._queue
        while queue and queue[0].fire_at <= end_us:
            ev = heapq.heappop(queue)
            if ev.cancelled:
                continue
            self._now = ev.fire_at
            ev.action(*ev.args)
            count += 1
        self._now = end_us
        self.executed += count
        return count

    def pending(self) -> int:
        return sum(1 for ev in self._queue if not ev.cancelled)


class RngStreams:
    """Independent named substreams derived from one 64-bit seed.

    Each stream is keyed by name, so drawing from one never shifts another.
    """

    def __init__(self, seed: int) -> None:
        self.seed = seed & 0xFFFFFFFFFFFFFFFF
        self._streams: dict[str, random.Random] = {}

    def stream(self, name: str) -> random.Random:
        rng = self._streams.get(name)
        if rng is None:
            digest = hashlib.sha256(f"{self.seed}:{name}".encode()).digest()
            rng = random.Random(int.from_bytes(digest[:8], "big"))
            self._streams[name] = rng
        return rng
