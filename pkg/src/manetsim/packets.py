"""Packet kinds and routing message bodies."""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Any

BROADCAST = -1


class Kind(str, Enum):
    RREQ = "Rreq"
    RREP = "Rrep"
    RERR = "Rerr"
    DATA_UDP = "DataUdp"
    DATA_TCP = "DataTcp"
    TCP_ACK = "TcpAck"
    FALSE_FLOOD = "FalseFlood"
    IDS_ALERT = "IdsAlert"

    def __str__(self) -> str:
        return self.value


ROUTING_KINDS = frozenset({Kind.RREQ, Kind.RREP, Kind.RERR, Kind.IDS_ALERT})
DATA_KINDS = frozenset({Kind.DATA_UDP, Kind.DATA_TCP})
PAYLOAD_KINDS = frozenset({Kind.DATA_UDP, Kind.DATA_TCP, Kind.TCP_ACK})

# queue priorities: lower value is served first
PRIO_ALERT = 0
PRIO_CONTROL = 1
PRIO_DATA = 2

SIZES = {
    Kind.RREQ: 48,
    Kind.RREP: 44,
    Kind.RERR: 32,
    Kind.TCP_ACK: 40,
    Kind.FALSE_FLOOD: 64,
    Kind.IDS_ALERT: 48,
}


@dataclass
class RreqMessage:
    origin: int
    origin_seq: int
    broadcast_id: int
    destination: int
    dest_seq_known: int
    hop_count: int = 0


@dataclass
class RrepMessage:
    destination: int
    dest_seq_no: int
    hop_count: int
    origin: int
    lifetime: float
    # node that first vouched for (destination, dest_seq_no): the destination
    # itself for honest replies, carried unchanged by intermediate replies
    advertiser: int = -1


@dataclass
class RerrMessage:
    unreachable: list[tuple[int, int]]

    def __post_init__(self) -> None:
        if not self.unreachable:
            raise ValueError("RERR needs at least one unreachable destination")


@dataclass
class AlertMessage:
    ids_node: int
    alert_id: int
    blocked: int
    reason: str


@dataclass(frozen=True)
class FalseRouteClaim:
    """Bogus advertisement carried by flood packets: short routes to every listed node."""

    advertiser: int
    burst: int
    routes: tuple[tuple[int, int], ...]  # (destination, claimed sequence number)
    hops: int = 1  # claimed distance from the relaying node to every destination


@dataclass
class Packet:
    pkt_id: int
    kind: Kind
    size: int
    src: int
    dst: int
    created_us: int
    body: Any = None
    seq: int = 0  # TCP sequence number for data and ACK
    ttl: int = 32
    meta: dict = field(default_factory=dict)

    @property
    def is_broadcast(self) -> bool:
        return self.dst == BROADCAST
