"""Per-node AODV: route discovery, replies, errors and the route table."""

from __future__ import annotations

import dataclasses
from collections import deque
from dataclasses import dataclass
from typing import TYPE_CHECKING

from .engine import to_us
from .packets import (
    BROADCAST,
    PAYLOAD_KINDS,
    PRIO_CONTROL,
    PRIO_DATA,
    Kind,
    Packet,
    RerrMessage,
    RrepMessage,
    RreqMessage,
)

if TYPE_CHECKING:
    from .network import Network


@dataclass
class AodvParams:
    route_lifetime: float = 10.0
    rreq_retries: int = 2
    discovery_timeout: float = 1.0
    flood_cache_time: float = 10.0
    buffer_limit: int = 50


@dataclass
class RoutingTableEntry:
    destination: int
    next_hop: int
    dest_seq_no: int
    hop_count: int
    expires_at: int  # microseconds
    valid: bool = True
    seq_valid: bool = True
    advertiser: int = -1


def rrep_supersedes(entry: RoutingTableEntry | None, seq: int, hops: int) -> bool:
    """Freshness rule for installing a route carried by a reply (or a request's reverse path)."""
    if entry is None or not entry.seq_valid:
        return True
    if seq > entry.dest_seq_no:
        return True
    if seq == entry.dest_seq_no:
        return hops < entry.hop_count or not entry.valid
    return False


class AodvAgent:
    def __init__(self, net: "Network", node: int, params: AodvParams):
        self.net = net
        self.node = node
        self.params = params
        self.own_seq = 0
        self.broadcast_id = 0
        self.table: dict[int, RoutingTableEntry] = {}
        self.seen_floods: dict[tuple[int, int], int] = {}
        self.pending: dict[int, list] = {}  # dest -> [attempt, timer event]
        self.buffer: deque[Packet] = deque()
        self.discoveries = 0

    # -- table ---------------------------------------------------------------

    def route_lookup(self, destination: int) -> int | None:
        entry = self.table.get(destination)
        if entry is None or not entry.valid:
            return None
        if entry.expires_at <= self.net.sim.now_us:
            entry.valid = False
            return None
        if entry.next_hop in self.net.nodes[self.node].blocked:
            entry.valid = False
            return None
        return entry.next_hop

    def _refresh(self, destination: int) -> None:
        entry = self.table.get(destination)
        if entry is not None and entry.valid:
            entry.expires_at = max(
                entry.expires_at, self.net.sim.now_us + to_us(self.params.route_lifetime)
            )

    def _install(self, destination: int, next_hop: int, seq: int, hops: int,
                 lifetime: float, advertiser: int) -> bool:
        entry = self.table.get(destination)
        if not rrep_supersedes(entry, seq, hops):
            return False
        expires = self.net.sim.now_us + to_us(lifetime)
        if entry is None:
            self.table[destination] = RoutingTableEntry(
                destination, next_hop, seq, hops, expires, True, True, advertiser
            )
        else:
            entry.next_hop = next_hop
            entry.dest_seq_no = seq
            entry.hop_count = hops
            entry.expires_at = max(expires, entry.expires_at) if entry.valid else expires
            entry.valid = True
            entry.seq_valid = True
            entry.advertiser = advertiser
        return True

    def _reverse_route(self, msg: RreqMessage, prev_hop: int) -> None:
        """Point the route to the requester at whoever relayed its request.

        The next hop always follows the request; the stored sequence number
        only moves up.
        """
        entry = self.table.get(msg.origin)
        if entry is None or msg.origin_seq >= entry.dest_seq_no or not entry.seq_valid:
            self._install(msg.origin, prev_hop, msg.origin_seq, msg.hop_count + 1,
                          self.params.route_lifetime, msg.origin)
            entry = self.table[msg.origin]
            if entry.next_hop == prev_hop:
                self._refresh(msg.origin)
                return
        entry.next_hop = prev_hop
        entry.hop_count = msg.hop_count + 1
        expires = self.net.sim.now_us + to_us(self.params.route_lifetime)
        entry.expires_at = max(entry.expires_at, expires) if entry.valid else expires
        entry.valid = True

    def invalidate_route(self, destination: int) -> None:
        entry = self.table.get(destination)
        if entry is not None:
            entry.valid = False

    def purge_blocked(self, blocked: int) -> list[int]:
        """Drop every route through ``blocked`` or vouched for by it.

        Sequence numbers vouched for by the blocked node are forgotten so that
        honest replies can replace them.
        """
        hit = []
        for dest, entry in self.table.items():
            if entry.next_hop == blocked or entry.advertiser == blocked:
                entry.valid = False
                if entry.advertiser == blocked:
                    entry.seq_valid = False
                hit.append(dest)
        return hit

    # -- data path -----------------------------------------------------------

    def send(self, pkt: Packet) -> None:
        """Hand a locally originated payload packet to routing."""
        next_hop = self.route_lookup(pkt.dst)
        if next_hop is not None:
            self._refresh(pkt.dst)
            self.net.enqueue(self.node, pkt, next_hop, PRIO_DATA)
            return
        self._buffer(pkt)
        self.request_route(pkt.dst)

    def _buffer(self, pkt: Packet) -> None:
        self.buffer.append(pkt)
        if len(self.buffer) > self.params.buffer_limit:
            old = self.buffer.popleft()
            self.net.log("d", self.node, old, "no-route")

    def forward(self, pkt: Packet, prev_hop: int) -> None:
        pkt.ttl -= 1
        if pkt.ttl <= 0:
            self.net.log("d", self.node, pkt, "ttl-expired")
            return
        next_hop = self.route_lookup(pkt.dst)
        if next_hop is None:
            self.net.log("d", self.node, pkt, "no-route")
            entry = self.table.get(pkt.dst)
            seq = entry.dest_seq_no if entry else 0
            self._send_rerr([(pkt.dst, seq)])
            return
        self._refresh(pkt.dst)
        self._refresh(pkt.src)
        self.net.forward(self.node, pkt, next_hop, PRIO_DATA)

    def _flush(self, destination: int) -> None:
        if not self.buffer:
            return
        keep: deque[Packet] = deque()
        for pkt in self.buffer:
            if pkt.dst == destination:
                next_hop = self.route_lookup(destination)
                if next_hop is None:
                    keep.append(pkt)
                    continue
                self.net.enqueue(self.node, pkt, next_hop, PRIO_DATA)
            else:
                keep.append(pkt)
        self.buffer = keep

    # -- discovery -----------------------------------------------------------

    def request_route(self, destination: int) -> None:
        if destination in self.pending:
            return
        self.pending[destination] = [0, None]
        self.originate_route_discovery(destination)

    def originate_route_discovery(self, destination: int) -> Packet:
        self.own_seq += 1
        self.broadcast_id += 1
        self.discoveries += 1
        entry = self.table.get(destination)
        known = entry.dest_seq_no if entry is not None and entry.seq_valid else 0
        msg = RreqMessage(self.node, self.own_seq, self.broadcast_id, destination, known, 0)
        self.seen_floods[(self.node, self.broadcast_id)] = (
            self.net.sim.now_us + to_us(self.params.flood_cache_time)
        )
        pkt = self.net.new_packet(Kind.RREQ, self.node, BROADCAST, body=msg)
        pkt.meta["target"] = destination
        self.net.originate(self.node, pkt, BROADCAST, PRIO_CONTROL)
        state = self.pending.setdefault(destination, [0, None])
        state[1] = self.net.sim.after_us(
            to_us(self.params.discovery_timeout), self._discovery_timeout, destination
        )
        return pkt

    def _discovery_timeout(self, destination: int) -> None:
        state = self.pending.get(destination)
        if state is None:
            return
        if self.route_lookup(destination) is not None:
            del self.pending[destination]
            return
        if state[0] < self.params.rreq_retries:
            state[0] += 1
            self.originate_route_discovery(destination)
            return
        del self.pending[destination]
        # destination un-reachable
        keep: deque[Packet] = deque()
        for pkt in self.buffer:
            if pkt.dst == destination:
                self.net.log("d", self.node, pkt, "no-route")
            else:
                keep.append(pkt)
        self.buffer = keep
        self.net.on_unreachable(self.node, destination)

    def _route_found(self, destination: int) -> None:
        state = self.pending.pop(destination, None)
        if state is not None and state[1] is not None:
            state[1].cancel()
        self._flush(destination)
        self.net.on_route_found(self.node, destination)

    def _seen(self, key: tuple[int, int]) -> bool:
        now = self.net.sim.now_us
        exp = self.seen_floods.get(key)
        if exp is not None and exp > now:
            return True
        self.seen_floods[key] = now + to_us(self.params.flood_cache_time)
        return False

    def handle_rreq(self, pkt: Packet, prev_hop: int) -> str:
        msg: RreqMessage = pkt.body
        if msg.origin == self.node or self._seen((msg.origin, msg.broadcast_id)):
            return "drop"
        self.net.log("r", self.node, pkt)
        self._reverse_route(msg, prev_hop)
        if msg.destination == self.node:
            self.own_seq = max(self.own_seq, msg.dest_seq_known) + 1
            rrep = RrepMessage(self.node, self.own_seq, 0, msg.origin,
                               self.params.route_lifetime, self.node)
            self._send_rrep(rrep)
            return "reply"
        entry = self.table.get(msg.destination)
        if (
            entry is not None
            and entry.seq_valid
            and entry.dest_seq_no >= msg.dest_seq_known
            and self.route_lookup(msg.destination) is not None
        ):
            remaining = max(entry.expires_at - self.net.sim.now_us, 0) / 1e6
            rrep = RrepMessage(msg.destination, entry.dest_seq_no, entry.hop_count,
                               msg.origin, remaining, entry.advertiser)
            self._send_rrep(rrep)
            return "reply"
        fwd = Packet(pkt.pkt_id, pkt.kind, pkt.size, pkt.src, pkt.dst, pkt.created_us,
                     dataclasses.replace(msg, hop_count=msg.hop_count + 1), meta=pkt.meta)
        self.net.forward(self.node, fwd, BROADCAST, PRIO_CONTROL)
        return "forward"

    def _send_rrep(self, rrep: RrepMessage) -> None:
        next_hop = self.route_lookup(rrep.origin)
        pkt = self.net.new_packet(Kind.RREP, self.node, rrep.origin, body=rrep)
        if next_hop is None:
            self.net.log("s", self.node, pkt)
            self.net.log("d", self.node, pkt, "no-route")
            return
        self.net.originate(self.node, pkt, next_hop, PRIO_CONTROL)

    def handle_rrep(self, pkt: Packet, prev_hop: int) -> str:
        msg: RrepMessage = pkt.body
        updated = self._install(msg.destination, prev_hop, msg.dest_seq_no,
                                msg.hop_count + 1, msg.lifetime or self.params.route_lifetime,
                                msg.advertiser)
        if msg.origin == self.node:
            self.net.log("r", self.node, pkt)
            if self.route_lookup(msg.destination) is not None:
                self._route_found(msg.destination)
            return "installed" if updated else "ignored"
        if pkt.ttl <= 1:
            self.net.log("d", self.node, pkt, "ttl-expired")
            return "drop"
        next_hop = self.route_lookup(msg.origin)
        if next_hop is None:
            self.net.log("d", self.node, pkt, "no-route")
            return "drop"
        self._refresh(msg.origin)
        fwd = Packet(pkt.pkt_id, pkt.kind, pkt.size, pkt.src, pkt.dst, pkt.created_us,
                     dataclasses.replace(msg, hop_count=msg.hop_count + 1), ttl=pkt.ttl - 1,
                     meta=pkt.meta)
        self.net.forward(self.node, fwd, next_hop, PRIO_CONTROL)
        return "forward"

    def adopt_claim(self, claim, prev_hop: int) -> list[int]:
        """Install the routes a false packet advertises, as AODV would for a reply."""
        adopted = []
        for dest, seq in claim.routes:
            if dest == self.node:
                continue
            if self._install(dest, prev_hop, seq, claim.hops + 1, self.params.route_lifetime,
                             claim.advertiser):
                adopted.append(dest)
                if dest in self.pending:
                    self._route_found(dest)
        return adopted

    # -- maintenance ---------------------------------------------------------

    def handle_link_break(self, dead_next_hop: int) -> RerrMessage | None:
        lost = []
        for dest, entry in self.table.items():
            if entry.valid and entry.next_hop == dead_next_hop:
                entry.valid = False
                lost.append((dest, entry.dest_seq_no))
        if not lost:
            return None
        return self._send_rerr(lost)

    def _send_rerr(self, unreachable: list[tuple[int, int]]) -> RerrMessage:
        msg = RerrMessage(unreachable)
        pkt = self.net.new_packet(Kind.RERR, self.node, BROADCAST, body=msg)
        self.net.originate(self.node, pkt, BROADCAST, PRIO_CONTROL)
        return msg

    def handle_rerr(self, pkt: Packet, prev_hop: int) -> None:
        self.net.log("r", self.node, pkt)
        lost = []
        for dest, _seq in pkt.body.unreachable:
            entry = self.table.get(dest)
            if entry is not None and entry.valid and entry.next_hop == prev_hop:
                entry.valid = False
                lost.append((dest, entry.dest_seq_no))
        if lost:
            self._send_rerr(lost)

    def link_failure(self, pkt: Packet, dead_next_hop: int) -> None:
        self.handle_link_break(dead_next_hop)
        if pkt.kind in PAYLOAD_KINDS and pkt.src == self.node:
            self._buffer(pkt)
            self.request_route(pkt.dst)
        else:
            self.net.log("d", self.node, pkt, "rerr-invalidated")
