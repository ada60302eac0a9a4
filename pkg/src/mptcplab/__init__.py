"""Flow-level simulation lab for MPTCP subflow routing on SDN datacenter fabrics."""

from .controller import Controller, RoutingConfig
from .fabric import Fabric, LogicalClock, run_handshakes
from .flowsim import allocate, report
from .topology import build_dh_jellyfish, build_fattree, build_jellyfish

__all__ = [
    "Controller",
    "RoutingConfig",
    "Fabric",
    "LogicalClock",
    "run_handshakes",
    "allocate",
    "report",
    "build_fattree",
    "build_jellyfish",
    "build_dh_jellyfish",
]
