"""MPTCP-aware subflow-to-path assignment.

Setup packets redirected from the fabric land in ``handle_setup_packet``.
Initial subflows pin the address pair's shortest path. Additional subflows
are matched to their connection via the token and walk a round-robin cursor
over the configured path set (deterministic mode) or draw uniformly from it
(random mode). Path sets are cached for an hour; per-connection state lives
for five seconds.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from . import pathing
from .fabric import RuleSpec, rules_for_path
from .pathing import Path, PathSet
from .topology import Topology
from .wire import MpCapableSyn, MpJoinSyn, SetupPacket

PATH_CACHE_TTL_MS = 60 * 60 * 1000
CONNECTION_TTL_MS = 5_000
DEFAULT_HOP_SLACK = 2


@dataclass
class RoutingConfig:
    assignment_mode: str = "deterministic"  # "deterministic" | "random"
    path_mode: str = "shortest"  # "shortest" | "k-shortest" | "k-edge-disjoint"
    k: int = 8
    rng_seed: int = 0
    hop_slack: int = DEFAULT_HOP_SLACK
    path_cache_ttl_ms: int = PATH_CACHE_TTL_MS
    connection_ttl_ms: int = CONNECTION_TTL_MS


@dataclass
class ControllerMetrics:
    packet_ins: int = 0
    tm_queries: int = 0
    cache_hits: int = 0
    cache_misses: int = 0
    rules_issued: int = 0
    primary_overwrites: int = 0


@dataclass
class IpEntry:
    """Per-(connection, address pair) path list with a round-robin cursor."""

    paths: list[Path]
    next_index: int = 0
    assigned: list[int] = field(default_factory=list)

    def __post_init__(self) -> None:
        if not self.assigned:
            self.assigned = [0] * len(self.paths)

    def next_path(self) -> Path:
        path = self.paths[self.next_index]
        self.assigned[self.next_index] += 1
        self.next_index = (self.next_index + 1) % len(self.paths)
        return path


@dataclass
class ConnectionEntry:
    token: int
    created_at: int
    ip_entries: dict[tuple[int, int], IpEntry] = field(default_factory=dict)


@dataclass
class Assignment:
    path: Path
    rules: list[RuleSpec]


def primary_path_exclusion(
    primary_paths: dict[tuple[int, int], Path],
    address_pair: tuple[int, int],
    path_set: PathSet,
) -> list[Path]:
    """Round-robin order for a fresh IpEntry: if the pair's initial subflow
    already took a path present in the set, move it to the back."""
    paths = list(path_set.paths)
    primary = primary_paths.get(address_pair)
    if primary is None or primary not in paths:
        return paths
    rest = [p for p in paths if p != primary]
    return rest + [primary]


class Controller:
    def __init__(self, topo: Topology, config: RoutingConfig | None = None):
        self.topology = topo
        self.config = config or RoutingConfig()
        self.path_cache: dict[tuple, tuple[PathSet, int]] = {}
        self.connections: dict[int, ConnectionEntry] = {}
        self.primary_paths: dict[tuple[int, int], Path] = {}
        self.metrics = ControllerMetrics()
        self._rng = random.Random(self.config.rng_seed)

    # -- path queries -----------------------------------------------------

    def _enumerate(self, src_addr: int, dst_addr: int) -> list[Path]:
        self.metrics.tm_queries += 1
        shortest = pathing.shortest_hop_count(self.topology, src_addr, dst_addr)
        paths = pathing.all_paths_bounded(
            self.topology, src_addr, dst_addr, shortest + self.config.hop_slack
        )
        return pathing.order_for_pair(paths, src_addr, dst_addr)

    def query_paths(
        self, src_addr: int, dst_addr: int, mode: str, k: int | None, now: int
    ) -> PathSet:
        key = (src_addr, dst_addr, mode, k if mode != "shortest" else None)
        cached = self.path_cache.get(key)
        if cached is not None and now - cached[1] <= self.config.path_cache_ttl_ms:
            self.metrics.cache_hits += 1
            return cached[0]
        self.metrics.cache_misses += 1
        ordered = self._enumerate(src_addr, dst_addr)
        if mode == "shortest":
            ps = pathing.filter_shortest(ordered, src_addr, dst_addr)
        elif mode == "k-shortest":
            ps = pathing.filter_k_shortest(ordered, src_addr, dst_addr, k)
        elif mode == "k-edge-disjoint":
            ps = pathing.filter_k_edge_disjoint(ordered, src_addr, dst_addr, k)
        else:
            raise ValueError(f"unknown path mode {mode!r}")
        self.path_cache[key] = (ps, now)
        return ps

    def _configured_set(self, src_addr: int, dst_addr: int, now: int) -> PathSet:
        return self.query_paths(
            src_addr, dst_addr, self.config.path_mode, self.config.k, now
        )

    # -- connection state -------------------------------------------------

    def _live_connection(self, token: int, now: int) -> ConnectionEntry | None:
        entry = self.connections.get(token)
        if entry is None:
            return None
        if now - entry.created_at > self.config.connection_ttl_ms:
            del self.connections[token]
            return None
        return entry

    def expire_connections(self, now: int) -> int:
        stale = [
            t
            for t, e in self.connections.items()
            if now - e.created_at > self.config.connection_ttl_ms
        ]
        for t in stale:
            del self.connections[t]
        return len(stale)

    # -- the forwarding decision ------------------------------------------

    def handle_setup_packet(self, packet: SetupPacket, now: int) -> Assignment | None:
        opt = packet.option
        if not packet.syn_flag or not isinstance(opt, (MpCapableSyn, MpJoinSyn)):
            return None  # not a subflow setup packet
        self.metrics.packet_ins += 1
        pair = (packet.src_addr, packet.dst_addr)
        random_mode = self.config.assignment_mode == "random"

        if isinstance(opt, MpCapableSyn):
            if random_mode:
                ps = self._configured_set(*pair, now)
                path = ps.paths[self._rng.randrange(len(ps.paths))]
            else:
                ps = self.query_paths(*pair, "shortest", None, now)
                path = ps.paths[0]
            if pair in self.primary_paths:
                self.metrics.primary_overwrites += 1
            self.primary_paths[pair] = path
        else:
            entry = self._live_connection(opt.token, now)
            if entry is None:
                entry = ConnectionEntry(opt.token, created_at=now)
                self.connections[opt.token] = entry
            ip_entry = entry.ip_entries.get(pair)
            if ip_entry is None:
                ps = self._configured_set(*pair, now)
                ip_entry = IpEntry(
                    primary_path_exclusion(self.primary_paths, pair, ps)
                )
                entry.ip_entries[pair] = ip_entry
            if random_mode:
                path = ip_entry.paths[self._rng.randrange(len(ip_entry.paths))]
            else:
                path = ip_entry.next_path()

        rules = rules_for_path(path, packet.match())
        self.metrics.rules_issued += len(rules)
        return Assignment(path, rules)

    def controller_metrics(self) -> ControllerMetrics:
        return self.metrics

    # -- debugging ----------------------------------------------------------

    def state_dump(self, now: int) -> str:
        lines = [f"now={now}ms"]
        lines.append("connections:")
        for token, entry in sorted(self.connections.items()):
            age = now - entry.created_at
            lines.append(f"  token={token:#010x} created_at={entry.created_at} age={age}ms")
            for pair, ipe in sorted(entry.ip_entries.items()):
                lines.append(
                    f"    pair={pair} paths={len(ipe.paths)} "
                    f"next={ipe.next_index} assigned={ipe.assigned}"
                )
        lines.append("path_cache:")
        for key, (ps, at) in sorted(self.path_cache.items(), key=lambda kv: str(kv[0])):
            lines.append(
                f"  key={key} paths={len(ps.paths)} inserted_at={at} age={now - at}ms"
            )
        return "\n".join(lines) + "\n"
