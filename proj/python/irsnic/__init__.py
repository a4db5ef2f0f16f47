"""Simulated 82599 NIC, driver and verification harness."""

from ._irsnic import (
    IrsError,
    Nic,
    bugcorpus,
    build_packet,
    conformance,
    forward,
    membench,
    parse_sequence,
)

__all__ = [
    "IrsError",
    "Nic",
    "bugcorpus",
    "build_packet",
    "conformance",
    "forward",
    "membench",
    "parse_sequence",
]
