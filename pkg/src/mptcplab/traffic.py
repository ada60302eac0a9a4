"""Traffic matrices (permutation / unconstrained) and subflow expansion.

Connection endpoints are hosts; subflows are enumerated over the fullmesh of
the endpoints' interface address pairs. Single-homed hosts have one address
pair, so the subflow parameter is the total count; dual-homed hosts get the
parameter per address pair (4 pairs, total 4n).
"""

from __future__ import annotations

import random
from dataclasses import dataclass

from .topology import Topology

DEFAULT_PORT_BASE = 40000
DEFAULT_DST_PORT = 5001


@dataclass
class TrafficMatrix:
    pattern: str  # "pt" | "ut"
    pairs: list[tuple[int, int]]  # (src_host, dst_host)
    seed: int = 0


@dataclass(frozen=True)
class SubflowSpec:
    src_addr: int
    dst_addr: int
    src_port: int
    dst_port: int
    is_initial: bool


@dataclass
class ConnectionSpec:
    conn_id: int
    src_host: int
    dst_host: int
    subflows: list[SubflowSpec]
    subflows_per_ip_pair: int


def gen_permutation(topo: Topology, seed: int = 0) -> TrafficMatrix:
    """Derangement of the hosts: each host once as source and once as
    destination, never paired with itself."""
    hosts = list(topo.hosts)
    if len(hosts) < 2:
        raise ValueError("need at least 2 hosts")
    rng = random.Random(f"{seed}:pt")
    targets = hosts[:]
    while True:
        rng.shuffle(targets)
        if all(a != b for a, b in zip(hosts, targets)):
            break
    return TrafficMatrix("pt", list(zip(hosts, targets)), seed)


def gen_unconstrained(topo: Topology, seed: int = 0) -> TrafficMatrix:
    """N independent uniform (src, dst) draws with src != dst."""
    hosts = list(topo.hosts)
    if len(hosts) < 2:
        raise ValueError("need at least 2 hosts")
    rng = random.Random(f"{seed}:ut")
    pairs = []
    for _ in hosts:
        src = hosts[rng.randrange(len(hosts))]
        dst = src
        while dst == src:
            dst = hosts[rng.randrange(len(hosts))]
        pairs.append((src, dst))
    return TrafficMatrix("ut", pairs, seed)


def expand_connections(
    matrix: TrafficMatrix,
    topo: Topology,
    subflows: int,
    port_base: int = DEFAULT_PORT_BASE,
    dst_port: int = DEFAULT_DST_PORT,
) -> list[ConnectionSpec]:
    """Turn host pairs into per-subflow 4-tuples.

    ``subflows`` is the total per connection for single-homed hosts and the
    per-address-pair count for multi-homed hosts. The first subflow is the
    initial one; the rest join. Source ports are allocated run-wide so every
    4-tuple is unique even when UT repeats a host pair.
    """
    if subflows < 1:
        raise ValueError(f"subflow count must be >= 1, got {subflows}")
    specs: list[ConnectionSpec] = []
    next_port = port_base
    for conn_id, (src_host, dst_host) in enumerate(matrix.pairs):
        src_ifaces = topo.interfaces_of(src_host)
        dst_ifaces = topo.interfaces_of(dst_host)
        addr_pairs = [
            (a.address, b.address) for a in src_ifaces for b in dst_ifaces
        ]
        total = subflows if len(addr_pairs) == 1 else subflows * len(addr_pairs)
        flows = []
        for j in range(total):
            sa, da = addr_pairs[j % len(addr_pairs)]
            flows.append(SubflowSpec(sa, da, next_port, dst_port, j == 0))
            next_port += 1
        specs.append(ConnectionSpec(conn_id, src_host, dst_host, flows, subflows))
    return specs


def matrix_to_csv(matrix: TrafficMatrix) -> str:
    return "\n".join(f"{s},{d}" for s, d in matrix.pairs) + "\n"


def matrix_from_csv(text: str, pattern: str = "ut", seed: int = 0) -> TrafficMatrix:
    pairs = []
    for line in text.splitlines():
        line = line.strip()
        if not line:
            continue
        s, d = line.split(",")
        pairs.append((int(s), int(d)))
    return TrafficMatrix(pattern, pairs, seed)
