"""Path enumeration between host interfaces and path-set filtering.

Paths run host -> switch ... switch -> host, are simple, and are bounded by a
total hop budget. Enumeration order is (hop_count, lexicographic node
sequence). ``order_for_pair`` re-sorts equal-hop ties with a per-address-pair
keyed digest so that different pairs do not all favor the same low-id
switches; the controller queries through that ordering.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass

from .topology import Topology


class NoPathError(Exception):
    """No path exists within the requested hop budget."""


@dataclass(frozen=True)
class Path:
    nodes: tuple[int, ...]

    @property
    def hop_count(self) -> int:
        return len(self.nodes) - 1

    def links(self) -> list[tuple[int, int]]:
        """All links, undirected normalized, access links included."""
        return [
            (a, b) if a < b else (b, a)
            for a, b in zip(self.nodes, self.nodes[1:])
        ]

    def directed_links(self) -> list[tuple[int, int]]:
        return list(zip(self.nodes, self.nodes[1:]))

    def core_links(self) -> frozenset[tuple[int, int]]:
        """Links between interior (switch) nodes; the two access links are
        excluded since every path of a host pair shares them."""
        inner = self.nodes[1:-1]
        return frozenset(
            (a, b) if a < b else (b, a) for a, b in zip(inner, inner[1:])
        )


@dataclass
class PathSet:
    src_addr: int
    dst_addr: int
    mode: str  # "shortest" | "k-shortest" | "k-edge-disjoint"
    k: int | None
    paths: list[Path]


def switch_distances(topo: Topology, from_switch: int) -> dict[int, int]:
    """BFS hop distances over the switch-only graph."""
    dist = {from_switch: 0}
    frontier = [from_switch]
    while frontier:
        nxt = []
        for u in frontier:
            for v in topo.switch_neighbors(u):
                if v not in dist:
                    dist[v] = dist[u] + 1
                    nxt.append(v)
        frontier = nxt
    return dist


def shortest_hop_count(topo: Topology, src_addr: int, dst_addr: int) -> int:
    """Minimum host-to-host hop count between two interfaces."""
    si = topo.interface(src_addr)
    di = topo.interface(dst_addr)
    dist = switch_distances(topo, di.switch)
    if si.switch not in dist:
        raise NoPathError(f"{src_addr} and {dst_addr} are not connected")
    return dist[si.switch] + 2


def all_paths_bounded(
    topo: Topology, src_addr: int, dst_addr: int, max_hops: int
) -> list[Path]:
    """Every simple host-to-host path with at most max_hops links, sorted by
    (hop_count, node sequence)."""
    si = topo.interface(src_addr)
    di = topo.interface(dst_addr)
    if si.host == di.host:
        raise NoPathError("source and destination interfaces share a host")
    dist = switch_distances(topo, di.switch)
    budget = max_hops - 2  # switch-to-switch links available
    found: list[tuple[int, ...]] = []
    if budget >= 0 and dist.get(si.switch, budget + 1) <= budget:
        stack = [si.switch]
        on_stack = {si.switch}

        def walk(u: int) -> None:
            if u == di.switch:
                found.append((si.host, *stack, di.host))
                return
            used = len(stack) - 1
            for v in topo.switch_neighbors(u):
                if v in on_stack:
                    continue
                if used + 1 + dist.get(v, budget + 1) > budget:
                    continue
                stack.append(v)
                on_stack.add(v)
                walk(v)
                stack.pop()
                on_stack.remove(v)

        walk(si.switch)
    if not found:
        raise NoPathError(
            f"no path from {src_addr} to {dst_addr} within {max_hops} hops"
        )
    found.sort(key=lambda nodes: (len(nodes) - 1, nodes))
    return [Path(nodes) for nodes in found]


def _pair_rank(src_addr: int, dst_addr: int, path: Path) -> bytes:
    h = hashlib.blake2b(digest_size=8)
    h.update(struct.pack(">II", src_addr, dst_addr))
    for node in path.nodes:
        h.update(struct.pack(">I", node))
    return h.digest()


def order_for_pair(paths: list[Path], src_addr: int, dst_addr: int) -> list[Path]:
    """Deterministic hop-ascending order whose tie-break is keyed to the
    address pair, decorrelating path preference across pairs."""
    return sorted(
        paths,
        key=lambda p: (p.hop_count, _pair_rank(src_addr, dst_addr, p), p.nodes),
    )


def filter_shortest(paths: list[Path], src_addr: int, dst_addr: int) -> PathSet:
    """All paths tying the minimum hop count."""
    if not paths:
        raise NoPathError("empty candidate path list")
    best = min(p.hop_count for p in paths)
    return PathSet(
        src_addr, dst_addr, "shortest", None, [p for p in paths if p.hop_count == best]
    )


def filter_k_shortest(
    paths: list[Path], src_addr: int, dst_addr: int, k: int
) -> PathSet:
    """First k paths in the given hop-ascending order (all of them if fewer)."""
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if not paths:
        raise NoPathError("empty candidate path list")
    return PathSet(src_addr, dst_addr, "k-shortest", k, list(paths[:k]))


def filter_k_edge_disjoint(
    paths: list[Path], src_addr: int, dst_addr: int, k: int
) -> PathSet:
    """Greedy scan admitting a path iff it shares no interior (switch-switch)
    link with anything already admitted; stops after k admissions."""
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    if not paths:
        raise NoPathError("empty candidate path list")
    admitted: list[Path] = []
    used: set[tuple[int, int]] = set()
    for p in paths:
        cl = p.core_links()
        if cl & used:
            continue
        admitted.append(p)
        used |= cl
        if len(admitted) == k:
            break
    return PathSet(src_addr, dst_addr, "k-edge-disjoint", k, admitted)


def dump_pathset(ps: PathSet) -> str:
    """Debug rendering, one path per line."""
    lines = [
        f"{ps.src_addr} {ps.dst_addr} {p.hop_count} {','.join(map(str, p.nodes))}"
        for p in ps.paths
    ]
    return "\n".join(lines) + ("\n" if lines else "")
