"""Nodes, interface queues and the idealized unit-disk medium."""

from __future__ import annotations

import dataclasses
import heapq
from dataclasses import dataclass
from typing import IO, TYPE_CHECKING

from .aodv import AodvAgent, AodvParams
from .engine import RngStreams, Simulator, to_us
from .ids import IdsMonitor
from .mobility import MobilityModel, Position, grid_positions
from .packets import (
    BROADCAST,
    DATA_KINDS,
    PAYLOAD_KINDS,
    PRIO_ALERT,
    PRIO_CONTROL,
    SIZES,
    Kind,
    Packet,
)
from .selfish import SelfishBehavior
from .trace import TraceRecord, TraceWriter
from .traffic import CbrSource, TcpParams, TcpSink, TcpSource

if TYPE_CHECKING:
    from .scenario import ScenarioConfig


@dataclass
class LinkParams:
    bandwidth: float = 2e6  # bit/s
    processing_delay: float = 0.001
    ifq_len: int = 50


class Node:
    def __init__(self, net: "Network", node_id: int, role: str):
        self.net = net
        self.id = node_id
        self.role = role
        self.agent = AodvAgent(net, node_id, net.aodv_params)
        self.ifq: list = []
        self.busy = False
        self.blocked: set[int] = set()
        self.seen_alerts: set[tuple[int, int]] = set()
        self.seen_claims: set[tuple[int, int]] = set()
        self.alerts: dict[int, Packet] = {}  # blocked node -> alert that announced it
        self.warned_at: dict[int, int] = {}
        self.selfish: SelfishBehavior | None = None
        self.ids: IdsMonitor | None = None

    def load(self) -> float:
        return len(self.ifq) / self.net.link.ifq_len

    def purge_queue(self, kind: Kind, reason: str) -> int:
        keep = [item for item in self.ifq if item[2].kind is not kind]
        removed = [item for item in self.ifq if item[2].kind is kind]
        if removed:
            self.ifq = keep
            heapq.heapify(self.ifq)
            for item in sorted(removed):
                self.net.log("d", self.id, item[2], reason)
        return len(removed)

    def apply_block(self, target: int) -> None:
        if target in self.blocked:
            return
        self.blocked.add(target)
        self.agent.purge_blocked(target)
        # queued packets from the blocked node are discarded unprocessed; those
        # waiting to go to it are handled as if the link had just broken
        stale = [it for it in self.ifq if it[2].src == target and target != self.id]
        doomed = [it for it in self.ifq if it[3] == target and it[2].src != target]
        if not stale and not doomed:
            return
        gone = {it[1] for it in stale} | {it[1] for it in doomed}
        self.ifq = [it for it in self.ifq if it[1] not in gone]
        heapq.heapify(self.ifq)
        for it in sorted(stale, key=lambda it: it[1]):
            self.net.log("b", self.id, it[2], "blocked-sender")
        for it in sorted(doomed, key=lambda it: it[1]):
            self.agent.link_failure(it[2], target)

    def receive(self, pkt: Packet, prev_hop: int) -> None:
        if self.selfish is not None:
            self.selfish.selfish_handle(pkt, prev_hop)
            return
        if prev_hop in self.blocked or pkt.src in self.blocked:
            self.net.log("b", self.id, pkt, "blocked-sender")
            self.warn(prev_hop if prev_hop in self.blocked else pkt.src)
            return
        kind = pkt.kind
        if kind is Kind.RREQ:
            self.agent.handle_rreq(pkt, prev_hop)
        elif kind is Kind.RREP:
            self.agent.handle_rrep(pkt, prev_hop)
        elif kind is Kind.RERR:
            self.agent.handle_rerr(pkt, prev_hop)
        elif kind is Kind.IDS_ALERT:
            self._handle_alert(pkt)
        elif kind is Kind.FALSE_FLOOD:
            self.net.log("r", self.id, pkt)
            self.net.flood_accepted += 1
            owner = self.net.nodes[pkt.src].selfish
            if owner is not None:
                owner.flood_accepted += 1
            claim = pkt.body
            self.agent.adopt_claim(claim, prev_hop)
            key = (claim.advertiser, claim.burst)
            if key not in self.seen_claims:
                # first copy of a burst is passed on, spreading the false routes
                self.seen_claims.add(key)
                relay = dataclasses.replace(pkt, body=dataclasses.replace(claim, hops=claim.hops + 1),
                                            meta={})
                self.net.forward(self.id, relay, BROADCAST, PRIO_CONTROL)
            else:
                # the rest occupies the interface queue until processed
                self.net.enqueue(self.id, pkt, None, PRIO_CONTROL)
        elif pkt.dst == self.id:
            self.net.log("r", self.id, pkt)
            self.net.deliver(self.id, pkt)
        else:
            self.agent.forward(pkt, prev_hop)

    def warn(self, target: int) -> None:
        """Repeat the alert for a blocked node that is still heard nearby.

        Neighbours that already know drop the repeat as a duplicate; a node that
        missed the original flood (partitioned at the time) learns and relays it.
        """
        pkt = self.alerts.get(target)
        if pkt is None:
            return
        now = self.net.sim.now_us
        last = self.warned_at.get(target)
        if last is not None and now - last < to_us(self.net.cfg.ids.window_len):
            return
        self.warned_at[target] = now
        self.net.forward(self.id, pkt, BROADCAST, PRIO_ALERT)

    def _handle_alert(self, pkt: Packet) -> None:
        msg = pkt.body
        key = (msg.ids_node, msg.alert_id)
        if key in self.seen_alerts:
            return
        self.seen_alerts.add(key)
        self.net.log("r", self.id, pkt)
        self.alerts.setdefault(msg.blocked, pkt)
        self.apply_block(msg.blocked)
        self.net.forward(self.id, pkt, BROADCAST, PRIO_ALERT)


class Network:
    """Owns the clock, the medium and every node of one simulation run."""

    def __init__(self, cfg: "ScenarioConfig", trace_stream: IO[str] | None = None,
                 keep_records: bool = False, trace_mobility: bool = False):
        cfg.validate()
        self.cfg = cfg
        self.sim = Simulator()
        self.rng = RngStreams(cfg.seed)
        self.link = cfg.link
        self.aodv_params = cfg.aodv
        self.tracer = TraceWriter(trace_stream, keep=keep_records)
        self.trace_mobility = trace_mobility
        self.end_us = to_us(cfg.duration)
        self._pkt_id = 0
        self._qseq = 0
        self.originated = 0
        self.delivered = 0
        self.flood_accepted = 0
        self.burst_log: list[tuple[int, int, tuple[int, ...]]] = []  # (arrival, sender, hearers)

        positions = self._initial_positions()
        self.mobility = MobilityModel(positions, cfg.mobility, cfg.area, cfg.radio_range,
                                      self.rng.stream("mobility"))
        self.nodes = [Node(self, i, cfg.role_of(i)) for i in range(cfg.node_count)]
        self.ids_nodes: list[Node] = []
        for node in self.nodes:
            if node.role == "selfish":
                node.selfish = SelfishBehavior(self, node.id, cfg.adversary)
            elif node.role == "ids":
                node.ids = IdsMonitor(self, node.id, cfg.ids)
                self.ids_nodes.append(node)

        tcp_params = TcpParams()
        self.sources: dict[int, CbrSource | TcpSource] = {}
        self.sinks: dict[int, TcpSink] = {}
        self.tcp_by_source: dict[int, list[TcpSource]] = {}
        for i, conn in enumerate(cfg.traffic):
            if conn.kind == "tcp":
                src = TcpSource(self, i, conn, tcp_params)
                self.sinks[i] = TcpSink(self, i, conn, tcp_params)
                self.tcp_by_source.setdefault(conn.source, []).append(src)
            else:
                src = CbrSource(self, i, conn)
            self.sources[i] = src

    def _initial_positions(self) -> list[Position]:
        cfg = self.cfg
        if cfg.placement == "grid":
            pos = grid_positions(cfg.node_count, cfg.area)
        else:
            rng = self.rng.stream("placement")
            pos = [Position(rng.uniform(0, cfg.area[0]), rng.uniform(0, cfg.area[1]))
                   for _ in range(cfg.node_count)]
        for node, (x, y) in cfg.positions.items():
            pos[node] = Position(x, y)
        return pos

    # -- run -----------------------------------------------------------------

    def start(self) -> None:
        t0 = self.cfg.start_time
        for src in self.sources.values():
            src.start()
        for node in self.nodes:
            if node.selfish is not None:
                node.selfish.start(self.cfg.duration)
        if self.cfg.mobility.moving or self.trace_mobility:
            self.sim.schedule(self._mobility_step, t0)

    def run(self) -> int:
        self.start()
        return self.sim.run_until_us(self.end_us)

    def _mobility_step(self) -> None:
        if self.sim.now_us > to_us(self.cfg.start_time):
            self.mobility.step()
        if self.trace_mobility:
            for node in self.nodes:
                p = self.mobility.position(node.id)
                self.tracer.log(TraceRecord(self.sim.now_us, "m", node.id, "Pos", 0, 0,
                                            int(round(p.x)), int(round(p.y)), "-"))
        nxt = self.sim.now_us + to_us(self.cfg.mobility.update_interval)
        if nxt <= self.end_us and (self.cfg.mobility.moving or self.trace_mobility):
            self.sim.schedule_us(self._mobility_step, nxt)

    # -- packets -------------------------------------------------------------

    def new_packet(self, kind: Kind, src: int, dst: int, size: int | None = None,
                   body=None, seq: int = 0) -> Packet:
        self._pkt_id += 1
        return Packet(self._pkt_id, kind, size if size is not None else SIZES[kind],
                      src, dst, self.sim.now_us, body, seq)

    def log(self, action: str, node: int, pkt: Packet, reason: str = "-") -> None:
        dst = pkt.body.blocked if pkt.kind is Kind.IDS_ALERT else pkt.dst
        self.tracer.log(TraceRecord(self.sim.now_us, action, node, pkt.kind.value,
                                    pkt.pkt_id, pkt.size, pkt.src, dst, reason))

    def send_payload(self, pkt: Packet) -> None:
        """Originate an application packet at its source node."""
        self.log("s", pkt.src, pkt)
        if pkt.kind in DATA_KINDS:
            self.originated += 1
        self.nodes[pkt.src].agent.send(pkt)

    def originate(self, node: int, pkt: Packet, next_hop: int, prio: int,
                  fast: bool = False, reason: str = "-") -> bool:
        self.log("s", node, pkt, reason)
        return self.enqueue(node, pkt, next_hop, prio, fast)

    def forward(self, node: int, pkt: Packet, next_hop: int, prio: int) -> bool:
        n = self.nodes[node]
        if len(n.ifq) >= self.link.ifq_len:
            self.log("d", node, pkt, "ifq-full")
            return False
        self.log("f", node, pkt)
        return self.enqueue(node, pkt, next_hop, prio)

    def enqueue(self, node: int, pkt: Packet, next_hop: int | None, prio: int,
                fast: bool = False) -> bool:
        n = self.nodes[node]
        if len(n.ifq) >= self.link.ifq_len:
            self.log("d", node, pkt, "ifq-full")
            return False
        self._qseq += 1
        heapq.heappush(n.ifq, (prio, self._qseq, pkt, next_hop, fast))
        if not n.busy:
            self._transmit_next(n)
        return True

    def _tx_us(self, size: int) -> int:
        return max(1, int(round(size * 8 * 1e6 / self.link.bandwidth)))

    def _transmit_next(self, n: Node) -> None:
        if not n.ifq:
            n.busy = False
            return
        _prio, _seq, pkt, next_hop, fast = heapq.heappop(n.ifq)
        n.busy = True
        self.sim.after_us(self._tx_us(pkt.size), self._tx_end, n, pkt, next_hop, fast)

    def _tx_end(self, n: Node, pkt: Packet, next_hop: int | None, fast: bool) -> None:
        if next_hop is not None:
            delay = 0 if fast else to_us(self.link.processing_delay)
            self.sim.after_us(delay, self._arrive, n.id, pkt, next_hop)
        self._transmit_next(n)

    def _arrive(self, sender: int, pkt: Packet, next_hop: int) -> None:
        nbrs = self.mobility.neighbors(sender)
        if next_hop == BROADCAST:
            for r in sorted(nbrs):
                self.nodes[r].receive(pkt, sender)
        elif next_hop in nbrs:
            self.nodes[next_hop].receive(pkt, sender)
        else:
            self.nodes[sender].agent.link_failure(pkt, next_hop)
        self._overhear(sender, nbrs, (pkt,))

    def _overhear(self, sender: int, nbrs, pkts) -> None:
        for ids_node in self.ids_nodes:
            if ids_node.id != sender and ids_node.id in nbrs:
                for pkt in pkts:
                    ids_node.ids.observe(sender, pkt)

    def emit_burst(self, node: int, pkts: list[Packet]) -> None:
        """Send a burst of broadcasts at once, outside the interface queue."""
        for pkt in pkts:
            self.log("s", node, pkt)
        delay = self._tx_us(pkts[0].size) + to_us(self.link.processing_delay)
        self.sim.after_us(delay, self._arrive_burst, node, pkts)

    def _arrive_burst(self, sender: int, pkts: list[Packet]) -> None:
        nbrs = self.mobility.neighbors(sender)
        self.burst_log.append((self.sim.now_us, sender, tuple(sorted(nbrs))))
        for r in sorted(nbrs):
            receiver = self.nodes[r]
            for pkt in pkts:
                receiver.receive(pkt, sender)
        self._overhear(sender, nbrs, pkts)

    # -- application hooks ---------------------------------------------------

    def deliver(self, node: int, pkt: Packet) -> None:
        if pkt.kind in DATA_KINDS:
            self.delivered += 1
        if pkt.kind is Kind.DATA_TCP:
            self.sinks[pkt.body].on_data(pkt)
        elif pkt.kind is Kind.TCP_ACK:
            self.sources[pkt.body].on_ack(pkt.seq)

    def on_route_found(self, node: int, dest: int) -> None:
        for src in self.tcp_by_source.get(node, ()):
            if src.conn.sink == dest:
                src.on_route_found()

    def on_unreachable(self, node: int, dest: int) -> None:
        for src in self.tcp_by_source.get(node, ()):
            if src.conn.sink == dest:
                src.on_unreachable()


@dataclass
class RunSummary:
    events: int
    originated: int
    delivered: int
    trace_lines: int

    def line(self) -> str:
        pdf = 100.0 * self.delivered / self.originated if self.originated else float("nan")
        return (f"events={self.events} originated={self.originated} "
                f"delivered={self.delivered} pdf={pdf:.2f}% trace_lines={self.trace_lines}")


def simulate(cfg: "ScenarioConfig", trace_stream: IO[str] | None = None,
             keep_records: bool = False, trace_mobility: bool = False) -> tuple[Network, RunSummary]:
    net = Network(cfg, trace_stream, keep_records, trace_mobility)
    events = net.run()
    return net, RunSummary(events, net.originated, net.delivered, net.tracer.count)
