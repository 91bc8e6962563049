"""Line-oriented simulation trace: writer, reader and record type.

Every line after the header is::

    T.tttttt action node kind pkt_id size src dst reason

with ``action`` one of ``s r f d b m``.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterator

from .engine import US_PER_S, format_time

HEADER = "#manetsim-trace v1"
ACTIONS = frozenset("srfdbm")
REASONS = frozenset(
    {
        "-",
        "no-route",
        "ifq-full",
        "selfish-block-tcp",
        "selfish-capture-udp",
        "selfish-drop",
        "blocked-sender",
        "rerr-invalidated",
        "ttl-expired",
        # block and purge reasons carried by IDS records
        "rate-threshold",
        "seq-anomaly",
        "load-infection",
    }
)
SELFISH_REASONS = frozenset({"selfish-block-tcp", "selfish-capture-udp", "selfish-drop"})


class TraceError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


@dataclass(frozen=True)
class TraceRecord:
    time_us: int
    action: str
    node: int
    kind: str
    pkt_id: int
    size: int
    src: int
    dst: int
    reason: str = "-"

    @property
    def time(self) -> float:
        return self.time_us / US_PER_S

    def format(self) -> str:
        return (
            f"{format_time(self.time_us)} {self.action} {self.node} {self.kind} "
            f"{self.pkt_id} {self.size} {self.src} {self.dst} {self.reason}"
        )


def _parse_time(tok: str) -> int:
    whole, _, frac = tok.partition(".")
    if not whole.isdigit() or len(frac) != 6 or not frac.isdigit():
        raise ValueError(f"bad timestamp {tok!r}")
    return int(whole) * US_PER_S + int(frac)


def parse_line(line: str, lineno: int | None = None) -> TraceRecord:
    parts = line.split()
    if len(parts) != 9:
        raise TraceError(f"expected 9 fields, got {len(parts)}", lineno)
    t, action, node, kind, pkt_id, size, src, dst, reason = parts
    if action not in ACTIONS:
        raise TraceError(f"unknown action {action!r}", lineno)
    try:
        return TraceRecord(
            _parse_time(t), action, int(node), kind, int(pkt_id), int(size),
            int(src), int(dst), reason,
        )
    except ValueError as exc:
        raise TraceError(str(exc), lineno) from exc


class TraceWriter:
    """Append-only writer. Accepts any text stream; records are also kept when ``keep`` is set."""

    def __init__(self, stream: IO[str] | None = None, keep: bool = False):
        self.stream = stream
        self.records: list[TraceRecord] | None = [] if keep else None
        self.count = 0
        if stream is not None:
            self._write(HEADER + "\n")

    def _write(self, text: str) -> None:
        try:
            self.stream.write(text)
        except OSError as exc:
            raise RuntimeError(f"trace write failed: {exc}") from exc

    def log(self, record: TraceRecord) -> None:
        if record.action not in ACTIONS:
            raise ValueError(f"unknown action {record.action!r}")
        if record.reason not in REASONS:
            raise ValueError(f"unknown reason {record.reason!r}")
        if self.stream is not None:
            self._write(record.format() + "\n")
        if self.records is not None:
            self.records.append(record)
        self.count += 1


def iter_trace(lines: Iterator[str]) -> Iterator[TraceRecord]:
    lines = iter(lines)
    first = next(lines, None)
    if first is None:
        return
    if first.rstrip("\n") != HEADER:
        raise TraceError(f"missing header {HEADER!r}", 1)
    last = -1
    for lineno, line in enumerate(lines, start=2):
        if not line.strip() or line.startswith("#"):
            continue
        rec = parse_line(line, lineno)
        if rec.time_us < last:
            raise TraceError("time goes backwards", lineno)
        last = rec.time_us
        yield rec


def read_trace(path: str | Path) -> list[TraceRecord]:
    with open(path, encoding="ascii") as fh:
        return list(iter_trace(fh))
