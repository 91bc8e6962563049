"""Node placement, random-waypoint motion and unit-disk connectivity."""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

DEFAULT_RADIO_RANGE = 250.0


@dataclass
class Position:
    x: float
    y: float

    def distance(self, other: "Position") -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass
class MobilityParams:
    model: str = "random-waypoint"
    max_speed: float = 30.0
    pause_time: float = 0.0
    update_interval: float = 0.1

    def __post_init__(self) -> None:
        if self.model not in ("fixed", "random-waypoint"):
            raise ValueError(f"unknown mobility model {self.model!r}")
        if self.update_interval <= 0:
            raise ValueError("update_interval must be positive")
        if self.max_speed < 0:
            raise ValueError("max_speed must be non-negative")

    @property
    def moving(self) -> bool:
        return self.model == "random-waypoint" and self.max_speed > 0


def in_range(a: Position, b: Position, rr: float = DEFAULT_RADIO_RANGE) -> bool:
    # inclusive boundary
    return (a.x - b.x) ** 2 + (a.y - b.y) ** 2 <= rr * rr


class Walker:
    """Random-waypoint state of one node."""

    __slots__ = ("pos", "waypoint", "speed", "pause_left")

    def __init__(self, pos: Position):
        self.pos = pos
        self.waypoint: Position | None = None
        self.speed = 0.0
        self.pause_left = 0.0


def step_random_waypoint(
    walker: Walker,
    params: MobilityParams,
    rng: random.Random,
    area: tuple[float, float],
) -> Position:
    """Advance one node by ``params.update_interval`` seconds and return its position."""
    if not params.moving:
        return walker.pos
    dt = params.update_interval
    while dt > 1e-12:
        if walker.pause_left > 0:
            used = min(walker.pause_left, dt)
            walker.pause_left -= used
            dt -= used
            continue
        if walker.waypoint is None:
            walker.waypoint = Position(rng.uniform(0, area[0]), rng.uniform(0, area[1]))
            # (0, max_speed]
            walker.speed = params.max_speed * (1.0 - rng.random())
        dist = walker.pos.distance(walker.waypoint)
        travel = walker.speed * dt
        if travel < dist:
            f = travel / dist
            walker.pos = Position(
                walker.pos.x + (walker.waypoint.x - walker.pos.x) * f,
                walker.pos.y + (walker.waypoint.y - walker.pos.y) * f,
            )
            dt = 0.0
        else:
            dt -= dist / walker.speed if walker.speed > 0 else dt
            walker.pos = walker.waypoint
            walker.waypoint = None
            walker.pause_left = params.pause_time
    return walker.pos


def grid_positions(n: int, area: tuple[float, float]) -> list[Position]:
    """Lay ``n`` nodes out on the most square grid that fits the area."""
    cols = max(1, math.ceil(math.sqrt(n * area[0] / area[1])))
    rows = math.ceil(n / cols)
    dx = area[0] / cols
    dy = area[1] / rows
    return [
        Position(dx * (i % cols + 0.5), dy * (i // cols + 0.5)) for i in range(n)
    ]


class MobilityModel:
    """Positions for all nodes plus a cached neighbor table refreshed on every step."""

    def __init__(
        self,
        positions: list[Position],
        params: MobilityParams,
        area: tuple[float, float],
        radio_range: float,
        rng: random.Random,
    ):
        for p in positions:
            if not (0 <= p.x <= area[0] and 0 <= p.y <= area[1]):
                raise ValueError(f"position {p} outside area {area}")
        if radio_range <= 0:
            raise ValueError("radio range must be positive")
        self.params = params
        self.area = area
        self.radio_range = radio_range
        self.rng = rng
        self.walkers = [Walker(Position(p.x, p.y)) for p in positions]
        self._neighbors: list[frozenset[int]] = []
        self._refresh()

    def __len__(self) -> int:
        return len(self.walkers)

    def position(self, node: int) -> Position:
        return self.walkers[node].pos

    def _refresh(self) -> None:
        rr2 = self.radio_range * self.radio_range
        pts = [(w.pos.x, w.pos.y) for w in self.walkers]
        nbrs: list[set[int]] = [set() for _ in pts]
        for i, (xi, yi) in enumerate(pts):
            for j in range(i + 1, len(pts)):
                xj, yj = pts[j]
                if (xi - xj) ** 2 + (yi - yj) ** 2 <= rr2:
                    nbrs[i].add(j)
                    nbrs[j].add(i)
        self._neighbors = [frozenset(s) for s in nbrs]

    def step(self) -> None:
        for w in self.walkers:
            step_random_waypoint(w, self.params, self.rng, self.area)
        self._refresh()

    def neighbors(self, node: int) -> frozenset[int]:
        if not 0 <= node < len(self.walkers):
            raise KeyError(f"unknown node {node}")
        return self._neighbors[node]

    def connected(self, a: int, b: int) -> bool:
        return b in self._neighbors[a]
