"""IDS overlay: promiscuous rate and sequence-number checks, network-wide blocking, load relief."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

from .engine import to_us
from .packets import BROADCAST, PRIO_ALERT, AlertMessage, Kind, Packet, RrepMessage

if TYPE_CHECKING:
    from .network import Network


@dataclass
class IdsConfig:
    threshold: int = 100
    window_len: float = 1.0
    seq_margin: int = 1
    normal_load: float = 0.8
    realert_interval: float = 0.0

    def validate(self) -> None:
        if self.threshold <= 0:
            raise ValueError("threshold must be positive")
        if self.window_len <= 0:
            raise ValueError("window_len must be positive")
        if self.seq_margin < 0:
            raise ValueError("seq_margin must be non-negative")
        if not 0 < self.normal_load <= 1:
            raise ValueError("normal_load must lie in (0, 1]")
        if self.realert_interval < 0:
            raise ValueError("realert_interval must be non-negative")


@dataclass
class RateWindow:
    sender: int
    window_start: int  # microseconds
    window_len: int  # microseconds
    count: int = 0

    def add(self, now_us: int) -> int:
        if now_us - self.window_start >= self.window_len:
            self.window_start = now_us
            self.count = 0
        self.count += 1
        return self.count


@dataclass(frozen=True)
class BlockEntry:
    blocked: int
    at: int  # microseconds
    reason: str  # rate-threshold | seq-anomaly | load-infection


def check_selfishness(window: RateWindow, cfg: IdsConfig) -> str:
    return "accept" if window.count < cfg.threshold else "block"


def check_seq_anomaly(rrep: RrepMessage, true_max: dict[int, int], margin: int) -> int | None:
    """Return the node to block for an overheard reply, or None.

    A reply vouched for by the destination itself is always plausible. Other
    replies are judged only when the destination's own sequence number has
    been overheard.
    """
    if rrep.advertiser == rrep.destination:
        return None
    known = true_max.get(rrep.destination)
    if known is None:
        return None
    if rrep.dest_seq_no > known + margin:
        return rrep.advertiser
    return None


class IdsMonitor:
    def __init__(self, net: "Network", node: int, cfg: IdsConfig):
        self.net = net
        self.node = node
        self.cfg = cfg
        self.windows: dict[int, RateWindow] = {}
        self.true_max: dict[int, int] = {}
        self.blocks: dict[int, BlockEntry] = {}
        self.alert_id = 0
        self.purged = 0
        self.max_count: dict[int, int] = {}
        self._load_check_at = -1
        self.congestion_notes: list[tuple[int, int]] = []

    def observe(self, sender: int, pkt: Packet) -> RateWindow:
        now = self.net.sim.now_us
        win = self.windows.get(sender)
        if win is None:
            win = self.windows[sender] = RateWindow(sender, now, to_us(self.cfg.window_len))
        count = win.add(now)
        if count > self.max_count.get(sender, 0):
            self.max_count[sender] = count
        if pkt.kind is Kind.RREQ:
            msg = pkt.body
            self._note_true(msg.origin, msg.origin_seq)
        elif pkt.kind is Kind.RREP:
            msg = pkt.body
            if msg.advertiser == msg.destination:
                self._note_true(msg.destination, msg.dest_seq_no)
            else:
                suspect = check_seq_anomaly(msg, self.true_max, self.cfg.seq_margin)
                if suspect is not None and suspect != self.node:
                    self.block(suspect, "seq-anomaly")
        if sender not in self.blocks and check_selfishness(win, self.cfg) == "block":
            self.block(sender, "rate-threshold")
        if pkt.kind is Kind.FALSE_FLOOD and self._load_check_at != now:
            self._load_check_at = now
            self.net.sim.schedule_us(self.sweep_load, now)
        return win

    def _note_true(self, node: int, seq: int) -> None:
        if seq > self.true_max.get(node, -1):
            self.true_max[node] = seq

    def block(self, target: int, reason: str) -> BlockEntry | None:
        if target in self.blocks:
            return None
        entry = BlockEntry(target, self.net.sim.now_us, reason)
        self.blocks[target] = entry
        self.net.nodes[self.node].apply_block(target)
        self.broadcast_block(entry)
        if self.cfg.realert_interval > 0:
            self.net.sim.after_us(to_us(self.cfg.realert_interval), self._realert, target)
        return entry

    def broadcast_block(self, entry: BlockEntry) -> Packet:
        self.alert_id += 1
        msg = AlertMessage(self.node, self.alert_id, entry.blocked, entry.reason)
        pkt = self.net.new_packet(Kind.IDS_ALERT, self.node, BROADCAST, body=msg)
        self.net.nodes[self.node].seen_alerts.add((self.node, self.alert_id))
        self.net.nodes[self.node].alerts.setdefault(entry.blocked, pkt)
        self.net.originate(self.node, pkt, BROADCAST, PRIO_ALERT, reason=entry.reason)
        return pkt

    def _realert(self, target: int) -> None:
        if self.net.sim.now_us >= self.net.end_us:
            return
        self.broadcast_block(self.blocks[target])
        self.net.sim.after_us(to_us(self.cfg.realert_interval), self._realert, target)

    def sweep_load(self) -> None:
        for nbr in sorted(self.net.mobility.neighbors(self.node)):
            if self.net.nodes[nbr].role != "selfish":
                self.check_weak_node_load(nbr)

    def check_weak_node_load(self, target: int) -> int:
        """Purge false packets from an overloaded neighbor's queue; returns how many."""
        if target != self.node and target not in self.net.mobility.neighbors(self.node):
            raise LookupError(f"node {target} out of range")
        node = self.net.nodes[target]
        if node.load() <= self.cfg.normal_load:
            return 0
        removed = node.purge_queue(Kind.FALSE_FLOOD, "load-infection")
        if not removed:
            # overloaded by legitimate traffic
            self.congestion_notes.append((self.net.sim.now_us, target))
        self.purged += removed
        return removed
