"""CBR/UDP sources and a stop-and-wait TCP sender/sink pair."""

from __future__ import annotations

from dataclasses import dataclass
from typing import TYPE_CHECKING

from .engine import Event, to_us
from .packets import SIZES, Kind, Packet

if TYPE_CHECKING:
    from .network import Network


@dataclass
class Connection:
    kind: str  # "cbr" (UDP) or "tcp"
    source: int
    sink: int
    rate: float = 4.0
    packet_size: int = 512
    start_at: float = 1.0
    stop_at: float = 95.0

    def __post_init__(self) -> None:
        if self.kind not in ("cbr", "tcp"):
            raise ValueError(f"unknown connection kind {self.kind!r}")
        if self.rate <= 0:
            raise ValueError("rate must be positive")
        if self.start_at >= self.stop_at:
            raise ValueError("start_at must precede stop_at")
        if self.source == self.sink:
            raise ValueError("source and sink must differ")


@dataclass
class TcpParams:
    rto: float = 1.0
    max_retries: int = 5
    ack_size: int = SIZES[Kind.TCP_ACK]


class CbrSource:
    def __init__(self, net: "Network", conn_id: int, conn: Connection):
        self.net = net
        self.conn_id = conn_id
        self.conn = conn
        self.sent = 0
        self.interval_us = to_us(1.0 / conn.rate)
        self.stop_us = to_us(conn.stop_at)

    def start(self) -> None:
        self.net.sim.schedule(self.tick, self.conn.start_at)

    def tick(self) -> None:
        now = self.net.sim.now_us
        if now >= self.stop_us:
            return
        pkt = self.net.new_packet(Kind.DATA_UDP, self.conn.source, self.conn.sink,
                                  size=self.conn.packet_size, body=self.conn_id)
        self.net.send_payload(pkt)
        self.sent += 1
        nxt = now + self.interval_us
        if nxt < self.stop_us:
            self.net.sim.schedule_us(self.tick, nxt)


class TcpSource:
    """Stop-and-wait sender fed by an application producing ``rate`` segments/s.

    The application is write-limited: while a segment is outstanding at most one
    new segment waits, so a stalled connection never releases a burst later.
    """

    def __init__(self, net: "Network", conn_id: int, conn: Connection, params: TcpParams):
        self.net = net
        self.conn_id = conn_id
        self.conn = conn
        self.params = params
        self.next_seq = 1
        self.backlog = 0
        self.unacked: int | None = None
        self.retries = 0
        self.rto = params.rto
        self.stalled = False
        self.timer: Event | None = None
        self.transmissions = 0
        self.acked = 0
        self.interval_us = to_us(1.0 / conn.rate)
        self.stop_us = to_us(conn.stop_at)

    def start(self) -> None:
        self.net.sim.schedule(self.app_tick, self.conn.start_at)

    def app_tick(self) -> None:
        now = self.net.sim.now_us
        if now >= self.stop_us:
            return
        self.backlog = 1
        self.try_send()
        nxt = now + self.interval_us
        if nxt < self.stop_us:
            self.net.sim.schedule_us(self.app_tick, nxt)

    def try_send(self) -> None:
        if self.unacked is not None or self.stalled or self.backlog == 0:
            return
        if self.net.sim.now_us >= self.stop_us:
            return
        self.unacked = self.next_seq
        self._transmit()

    def _transmit(self) -> None:
        pkt = self.net.new_packet(Kind.DATA_TCP, self.conn.source, self.conn.sink,
                                  size=self.conn.packet_size, body=self.conn_id,
                                  seq=self.unacked)
        self.transmissions += 1
        self.net.send_payload(pkt)
        self.timer = self.net.sim.after_us(to_us(self.rto), self._timeout)

    def _timeout(self) -> None:
        self.timer = None
        if self.unacked is None:
            return
        if self.net.sim.now_us >= self.stop_us:
            self.unacked = None
            return
        self.retries += 1
        if self.retries <= self.params.max_retries:
            self.rto *= 2
            self._transmit()
            return
        # the path is presumed broken: forget it and wait for a fresh route
        self.unacked = None
        self.stalled = True
        agent = self.net.nodes[self.conn.source].agent
        agent.invalidate_route(self.conn.sink)
        agent.request_route(self.conn.sink)

    def on_ack(self, seq: int) -> None:
        if self.unacked is None or seq != self.unacked:
            return
        if self.timer is not None:
            self.timer.cancel()
            self.timer = None
        self.acked += 1
        self.unacked = None
        self.next_seq += 1
        self.backlog = 0
        self.retries = 0
        self.rto = self.params.rto
        self.try_send()

    def on_route_found(self) -> None:
        if self.stalled:
            self.stalled = False
            self.retries = 0
            self.rto = self.params.rto
            self.try_send()

    def on_unreachable(self) -> None:
        if self.stalled:
            self.net.sim.after_us(to_us(self.params.rto), self._retry_route)

    def _retry_route(self) -> None:
        if self.stalled and self.net.sim.now_us < self.stop_us:
            self.net.nodes[self.conn.source].agent.request_route(self.conn.sink)


class TcpSink:
    def __init__(self, net: "Network", conn_id: int, conn: Connection, params: TcpParams):
        self.net = net
        self.conn_id = conn_id
        self.conn = conn
        self.params = params
        self.delivered: set[int] = set()
        self.duplicates = 0

    def on_data(self, pkt: Packet) -> None:
        if pkt.seq in self.delivered:
            self.duplicates += 1
        else:
            self.delivered.add(pkt.seq)
        ack = self.net.new_packet(Kind.TCP_ACK, self.conn.sink, self.conn.source,
                                  size=self.params.ack_size, body=self.conn_id, seq=pkt.seq)
        self.net.send_payload(ack)
