"""Selfish-node attack overlay: forged route replies, traffic absorption, false-packet flooding."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

from .engine import to_us
from .packets import (
    BROADCAST,
    PRIO_CONTROL,
    FalseRouteClaim,
    Kind,
    Packet,
    RrepMessage,
    RreqMessage,
)

if TYPE_CHECKING:
    from .network import Network


class AdversaryConfigError(ValueError):
    pass


@dataclass
class AdversaryConfig:
    scan_rate: float = 1000.0
    pkts_max: float = 10.0
    n_selfish: int = 1
    fake_seq_boost: int = 100
    flood_rate: int = 100
    flood_priority: int = 1
    flood_window: float = 1.0
    flood_start: float = 1.0
    flood_enabled: bool = True

    def validate(self) -> None:
        if self.n_selfish < 1:
            raise AdversaryConfigError("n_selfish must be at least 1")
        if self.flood_rate < 100:
            raise AdversaryConfigError("flood_rate must be at least 100 per window")
        if self.flood_priority != 1:
            raise AdversaryConfigError("flood_priority must be 1 (highest)")
        if self.flood_window <= 0:
            raise AdversaryConfigError("flood_window must be positive")
        if self.fake_seq_boost < 0:
            raise AdversaryConfigError("fake_seq_boost must be non-negative")


def false_packet_rate(cfg: AdversaryConfig) -> float:
    """False packets per flood window for each selfish node."""
    if cfg.n_selfish <= 0:
        raise AdversaryConfigError("false packet rate undefined without selfish nodes")
    return cfg.scan_rate * cfg.pkts_max / cfg.n_selfish


def burst_size(cfg: AdversaryConfig) -> int:
    return int(min(cfg.flood_rate, false_packet_rate(cfg)))


def forge_rrep(rreq: RreqMessage, max_seen_seq: int, boost: int, forger: int) -> RrepMessage:
    """Reply claiming a one-hop route fresher than anything the forger has seen."""
    seq = max(max_seen_seq, rreq.dest_seq_known) + boost
    return RrepMessage(rreq.destination, seq, 1, rreq.origin, 10.0, forger)


class SelfishBehavior:
    def __init__(self, net: "Network", node: int, cfg: AdversaryConfig):
        self.net = net
        self.node = node
        self.cfg = cfg
        self.max_seen: dict[int, int] = {}
        self.answered: set[tuple[int, int]] = set()
        self.forged = 0
        self.flood_sent = 0
        self.flood_accepted = 0
        self.bursts: list[int] = []  # burst start times, microseconds

    def _note_seq(self, node: int, seq: int) -> None:
        if seq > self.max_seen.get(node, -1):
            self.max_seen[node] = seq

    def selfish_handle(self, pkt: Packet, prev_hop: int) -> str:
        kind = pkt.kind
        if kind is Kind.RREQ:
            msg: RreqMessage = pkt.body
            key = (msg.origin, msg.broadcast_id)
            if key in self.answered or msg.origin == self.node:
                return "ignore"
            self.answered.add(key)
            self.net.log("r", self.node, pkt)
            self._note_seq(msg.origin, msg.origin_seq)
            self._note_seq(msg.destination, msg.dest_seq_known)
            self.send_forged(msg, prev_hop)
            return "forge"
        if kind is Kind.RREP:
            self._note_seq(pkt.body.destination, pkt.body.dest_seq_no)
        if kind in (Kind.DATA_TCP, Kind.TCP_ACK):
            self.net.log("d", self.node, pkt, "selfish-block-tcp")
            return "block"
        if kind is Kind.DATA_UDP:
            self.net.log("d", self.node, pkt, "selfish-capture-udp")
            return "capture"
        self.net.log("d", self.node, pkt, "selfish-drop")
        return "drop"

    def send_forged(self, rreq: RreqMessage, prev_hop: int) -> Packet:
        rrep = forge_rrep(rreq, self.max_seen.get(rreq.destination, 0),
                          self.cfg.fake_seq_boost, self.node)
        pkt = self.net.new_packet(Kind.RREP, self.node, rreq.origin, body=rrep)
        self.forged += 1
        # answered straight back to whoever relayed the request, no processing delay
        self.net.originate(self.node, pkt, prev_hop, PRIO_CONTROL, fast=True)
        return pkt

    def false_claim(self) -> FalseRouteClaim:
        """Shortest, freshest route to every node the attacker has heard of."""
        # each advertisement outbids the previous one so it displaces stale entries
        boost = self.cfg.fake_seq_boost + len(self.bursts)
        routes = tuple((node, max(seq, 0) + boost)
                       for node, seq in sorted(self.max_seen.items()) if node != self.node)
        return FalseRouteClaim(self.node, len(self.bursts), routes)

    def start(self, until: float) -> None:
        if not self.cfg.flood_enabled:
            return
        self._until_us = to_us(until)
        self.net.sim.schedule(self.flood_false_packets, self.cfg.flood_start)

    def flood_false_packets(self) -> list[Packet]:
        now = self.net.sim.now_us
        claim = self.false_claim()
        self.bursts.append(now)
        burst = [
            self.net.new_packet(Kind.FALSE_FLOOD, self.node, BROADCAST, body=claim)
            for _ in range(burst_size(self.cfg))
        ]
        self.flood_sent += len(burst)
        self.net.emit_burst(self.node, burst)
        nxt = now + to_us(self.cfg.flood_window)
        if nxt < self._until_us:
            self.net.sim.schedule_us(self.flood_false_packets, nxt)
        return burst
