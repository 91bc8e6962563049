"""Trace-to-numbers analysis: delivery, throughput, routing load, delay, infection, per-node tables.

Every function takes a list of parsed ``TraceRecord`` objects and nothing else.
"""

from __future__ import annotations

import csv
import math
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .engine import US_PER_S, to_us
from .trace import SELFISH_REASONS, TraceRecord

DATA = frozenset({"DataUdp", "DataTcp"})
ROUTING = frozenset({"Rreq", "Rrep", "Rerr", "IdsAlert"})
BROADCAST_KINDS = frozenset({"Rreq", "Rerr", "IdsAlert", "FalseFlood"})


class MetricUndefined(ValueError):
    """A metric whose denominator is zero."""


@dataclass
class ConservationReport:
    packets: int = 0
    violations: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations


def _is_delivery(rec: TraceRecord) -> bool:
    return rec.action == "r" and rec.node == rec.dst


def check_conservation(records: Iterable[TraceRecord]) -> ConservationReport:
    """Each packet is originated once; unicast packets end at most once."""
    origins: Counter[int] = Counter()
    terminals: Counter[int] = Counter()
    seen: set[int] = set()
    last = -1
    rep = ConservationReport()
    for rec in records:
        if rec.action == "m":
            continue
        if rec.time_us < last:
            rep.violations.append(f"time goes backwards at packet {rec.pkt_id}")
        last = rec.time_us
        seen.add(rec.pkt_id)
        if rec.action == "s" and rec.node == rec.src:
            origins[rec.pkt_id] += 1
        if rec.kind in BROADCAST_KINDS:
            continue
        if rec.action in "db" or _is_delivery(rec):
            terminals[rec.pkt_id] += 1
    rep.packets = len(seen)
    for pid in sorted(seen):
        if origins[pid] != 1:
            rep.violations.append(f"packet {pid}: {origins[pid]} originations")
        if terminals[pid] > 1:
            rep.violations.append(f"packet {pid}: {terminals[pid]} terminal records")
    return rep


def _data_origins(records: Sequence[TraceRecord]) -> dict[int, int]:
    return {r.pkt_id: r.time_us for r in records
            if r.action == "s" and r.kind in DATA and r.node == r.src}


def pdf(records: Sequence[TraceRecord], kinds: frozenset[str] = DATA) -> float:
    sent = sum(1 for r in records if r.action == "s" and r.kind in kinds and r.node == r.src)
    if sent == 0:
        raise MetricUndefined("no data packets originated")
    got = sum(1 for r in records if r.kind in kinds and _is_delivery(r))
    return 100.0 * got / sent


def _n_bins(records: Sequence[TraceRecord], bin_us: int, end: float | None) -> int:
    end_us = to_us(end) if end is not None else (records[-1].time_us if records else 0)
    return max(1, math.ceil(end_us / bin_us))


def throughput_series(records: Sequence[TraceRecord], bin: float = 1.0,
                      end: float | None = None) -> list[tuple[float, float]]:
    """Data deliveries per second in consecutive bins starting at t=0."""
    if bin <= 0:
        raise ValueError("bin must be positive")
    bin_us = to_us(bin)
    n = _n_bins(records, bin_us, end)
    counts = [0] * n
    for r in records:
        if r.kind in DATA and _is_delivery(r):
            i = min(r.time_us // bin_us, n - 1)
            counts[i] += 1
    return [(i * bin, c / bin) for i, c in enumerate(counts)]


def routing_transmissions(records: Sequence[TraceRecord]) -> int:
    return sum(1 for r in records if r.action in "sf" and r.kind in ROUTING)


def nrl(records: Sequence[TraceRecord]) -> float:
    delivered = sum(1 for r in records if r.kind in DATA and _is_delivery(r))
    if delivered == 0:
        raise MetricUndefined("no data packets delivered")
    return routing_transmissions(records) / delivered


def avg_end_to_end_delay(records: Sequence[TraceRecord]) -> float:
    origins = _data_origins(records)
    delays = [r.time_us - origins[r.pkt_id] for r in records
              if r.kind in DATA and _is_delivery(r) and r.pkt_id in origins]
    if not delays:
        raise MetricUndefined("no data packets delivered")
    return sum(delays) / len(delays) / US_PER_S


def infection_series(records: Sequence[TraceRecord], bin: float = 1.0,
                     end: float | None = None) -> list[tuple[float, float]]:
    """Share of offered load eaten by attackers, per bin.

    Numerator: data packets ending in a selfish drop (binned by origination)
    plus false packets accepted by normal nodes. Denominator: data
    originations plus false-packet receptions at normal nodes.
    """
    if bin <= 0:
        raise ValueError("bin must be positive")
    bin_us = to_us(bin)
    n = _n_bins(records, bin_us, end)
    infected = [0] * n
    offered = [0] * n
    origins = _data_origins(records)

    def idx(t_us: int) -> int:
        return min(t_us // bin_us, n - 1)

    for t in origins.values():
        offered[idx(t)] += 1
    for r in records:
        if r.kind in DATA and r.action == "d" and r.reason in SELFISH_REASONS:
            t = origins.get(r.pkt_id, r.time_us)
            infected[idx(t)] += 1
        elif r.kind == "FalseFlood" and r.node != r.src:
            if r.action == "r":
                infected[idx(r.time_us)] += 1
                offered[idx(r.time_us)] += 1
            elif r.action == "b":
                offered[idx(r.time_us)] += 1
    return [(i * bin, 100.0 * infected[i] / offered[i] if offered[i] else 0.0)
            for i in range(n)]


def block_entries(records: Sequence[TraceRecord]) -> dict[int, tuple[float, str]]:
    """First block time and reason per blocked node, from the IDS's own alerts."""
    out: dict[int, tuple[float, str]] = {}
    for r in records:
        if r.kind == "IdsAlert" and r.action == "s" and r.node == r.src and r.dst not in out:
            out[r.dst] = (r.time, r.reason)
    return out


def block_entry_times(records: Sequence[TraceRecord]) -> dict[tuple[int, int], float]:
    """When each node added each blocked node to its own blocklist.

    Keys are (holder, blocked): the IDS records its entry when it originates
    the alert, every other node when it first receives one.
    """
    out: dict[tuple[int, int], float] = {}
    for r in records:
        if r.kind != "IdsAlert":
            continue
        if (r.action == "s" and r.node == r.src) or r.action == "r":
            out.setdefault((r.node, r.dst), r.time)
    return out


# -- per-node accounting -----------------------------------------------------

@dataclass
class NodeTables:
    data_sent: dict[int, int]
    data_received: dict[int, int]
    data_drops: dict[int, int]
    ack_sent: dict[int, int]
    ack_received: dict[int, int]
    ack_drops: dict[int, int]

    @property
    def totals(self) -> dict[str, int]:
        return {name: sum(getattr(self, name).values())
                for name in ("data_sent", "data_received", "data_drops",
                             "ack_sent", "ack_received", "ack_drops")}

    @property
    def empty(self) -> bool:
        return not any(self.totals.values())


def per_node_tables(records: Sequence[TraceRecord]) -> NodeTables:
    cols: dict[str, Counter[int]] = defaultdict(Counter)
    for r in records:
        if r.kind == "DataTcp":
            prefix = "data"
        elif r.kind == "TcpAck":
            prefix = "ack"
        else:
            continue
        if r.action == "s" and r.node == r.src:
            cols[prefix + "_sent"][r.node] += 1
        elif _is_delivery(r):
            cols[prefix + "_received"][r.node] += 1
        elif r.action in "db":
            cols[prefix + "_drops"][r.node] += 1
    return NodeTables(*(dict(sorted(cols[name].items())) for name in
                        ("data_sent", "data_received", "data_drops",
                         "ack_sent", "ack_received", "ack_drops")))


def _side_by_side(headers: list[str], columns: list[list[tuple[int, int]]],
                  totals: list[str]) -> str:
    rows = max((len(c) for c in columns), default=0)
    cells = [headers]
    for i in range(rows):
        line = []
        for col in columns:
            if i < len(col):
                line += [str(col[i][0]), str(col[i][1])]
            else:
                line += ["", ""]
        cells.append(line)
    cells.append(totals)
    widths = [max(len(row[j]) for row in cells) for j in range(len(headers))]
    return "\n".join("  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip()
                     for row in cells)


def render_tables(t: NodeTables) -> str:
    tot = t.totals
    data = _side_by_side(
        ["Sender Node", "Packets Sends", "Receiver Node", "Packets Receives",
         "Packets Drop by Node", "Drop Packets"],
        [list(t.data_sent.items()), list(t.data_received.items()), list(t.data_drops.items())],
        ["", f"Packets send = {tot['data_sent']}", "",
         f"Packets receive = {tot['data_received']}", "", f"Packet Drop = {tot['data_drops']}"],
    )
    ack = _side_by_side(
        ["Ack receiver Node", "Ack packets receives", "Ack drop by Node", "Ack Drop"],
        [list(t.ack_received.items()), list(t.ack_drops.items())],
        ["", f"Total Ack. receives = {tot['ack_received']}", "",
         f"Ack. Drop = {tot['ack_drops']}"],
    )
    note = "" if not t.empty else "(no TCP traffic in trace)\n"
    return f"{note}TCP data packets\n{data}\n\nTCP acknowledgements\n{ack}\n"


def write_tables_csv(t: NodeTables, directory: str | Path) -> list[Path]:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    paths = []
    for name in ("data_sent", "data_received", "data_drops",
                 "ack_sent", "ack_received", "ack_drops"):
        path = directory / f"table_{name}.csv"
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["node", "packets"])
            for node, count in getattr(t, name).items():
                w.writerow([node, count])
            w.writerow(["total", sum(getattr(t, name).values())])
        paths.append(path)
    return paths


def write_series_csv(series: list[tuple[float, float]], path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["time", "value"])
        for t, v in series:
            w.writerow([f"{t:g}", f"{v:.6f}"])
    return path


def write_summary_csv(summary: dict[str, float | str], path: str | Path) -> Path:
    path = Path(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["metric", "value"])
        for k, v in summary.items():
            w.writerow([k, f"{v:.6f}" if isinstance(v, float) else v])
    return path
