"""Packet-level MANET simulator: AODV, a selfish-node attacker, an IDS, and trace analytics."""

__version__ = "0.1.0"
