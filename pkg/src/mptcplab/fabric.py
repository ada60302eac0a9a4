"""Simulated rule-table switches and event-ordered handshake propagation.

Switches do exact-match forwarding on the (src, dst, sport, dport) 4-tuple.
A miss on a setup packet becomes a packet-in to the controller, which answers
with a path and a batch of rules (both directions, every on-path switch); the
packet then resumes at the same switch. Time is a logical millisecond clock:
1 ms per link traversal, 1 ms per controller handling.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .pathing import Path
from .topology import Topology
from . import wire
from .wire import Match, SetupPacket

DEFAULT_IDLE_TIMEOUT_MS = 5_000
HOP_MS = 1
CONTROLLER_MS = 1


class ForwardingError(RuntimeError):
    """A non-setup packet missed the rule tables; the simulation contract is broken."""


@dataclass
class LogicalClock:
    now_ms: int = 0

    def advance(self, ms: int) -> None:
        if ms < 0:
            raise ValueError("clock cannot run backwards")
        self.now_ms += ms


@dataclass
class FlowRule:
    switch: int
    match: Match
    out_port: int  # neighbor node the packet is sent to
    installed_at: int
    last_hit: int
    idle_timeout_ms: int = DEFAULT_IDLE_TIMEOUT_MS


@dataclass(frozen=True)
class RuleSpec:
    """Controller-to-switch install instruction."""

    switch: int
    match: Match
    out_port: int


class SwitchState:
    def __init__(self, node: int, idle_timeout_ms: int = DEFAULT_IDLE_TIMEOUT_MS):
        self.node = node
        self.idle_timeout_ms = idle_timeout_ms
        self.rules: dict[Match, FlowRule] = {}
        self.packet_in_count = 0

    def forward(self, match: Match, now: int) -> int | None:
        """Out port on a rule hit (refreshing last_hit), None on a miss."""
        rule = self.rules.get(match)
        if rule is not None and now - rule.last_hit > rule.idle_timeout_ms:
            del self.rules[match]  # idle-expired, same as absent
            rule = None
        if rule is None:
            self.packet_in_count += 1
            return None
        rule.last_hit = now
        return rule.out_port

    def expire(self, now: int) -> int:
        stale = [
            m for m, r in self.rules.items() if now - r.last_hit > r.idle_timeout_ms
        ]
        for m in stale:
            del self.rules[m]
        return len(stale)


def rules_for_path(path: Path, match: Match) -> list[RuleSpec]:
    """Two rules per on-path switch: forward match toward the destination,
    reversed match back toward the source."""
    src, dst, sport, dport = match
    reverse = (dst, src, dport, sport)
    specs: list[RuleSpec] = []
    nodes = path.nodes
    for i in range(1, len(nodes) - 1):
        specs.append(RuleSpec(nodes[i], match, nodes[i + 1]))
        specs.append(RuleSpec(nodes[i], reverse, nodes[i - 1]))
    return specs


class Fabric:
    """All switch tables of one topology plus install bookkeeping."""

    def __init__(self, topo: Topology, idle_timeout_ms: int = DEFAULT_IDLE_TIMEOUT_MS):
        self.topology = topo
        self.switches = {s: SwitchState(s, idle_timeout_ms) for s in topo.switches}
        self.conflict_count = 0
        self.rules_installed_total = 0

    def install(self, specs: list[RuleSpec], now: int) -> int:
        for spec in specs:
            table = self.switches[spec.switch]
            existing = table.rules.get(spec.match)
            if existing is not None:
                if existing.out_port != spec.out_port:
                    self.conflict_count += 1
                    table.rules[spec.match] = FlowRule(
                        spec.switch, spec.match, spec.out_port, now, now,
                        table.idle_timeout_ms,
                    )
                else:
                    existing.last_hit = now
            else:
                table.rules[spec.match] = FlowRule(
                    spec.switch, spec.match, spec.out_port, now, now,
                    table.idle_timeout_ms,
                )
        self.rules_installed_total += len(specs)
        return len(specs)

    def expire_all(self, now: int) -> int:
        return sum(sw.expire(now) for sw in self.switches.values())

    def total_packet_ins(self) -> int:
        return sum(sw.packet_in_count for sw in self.switches.values())


@dataclass
class SubflowRecord:
    conn_id: int
    subflow_id: int
    src_addr: int
    dst_addr: int
    src_port: int
    dst_port: int
    path: Path | None
    packet_ins: int
    rules_installed: int
    failed: bool


@dataclass
class HandshakeTrace:
    records: list[SubflowRecord] = field(default_factory=list)

    def placements(self):
        from .flowsim import SubflowPlacement

        return [
            SubflowPlacement(r.conn_id, r.subflow_id, r.path)
            for r in self.records
            if not r.failed and r.path is not None
        ]

    @property
    def total_packet_ins(self) -> int:
        return sum(r.packet_ins for r in self.records)

    @property
    def total_rules(self) -> int:
        return sum(r.rules_installed for r in self.records)

    @property
    def established_count(self) -> int:
        return sum(1 for r in self.records if not r.failed)

    def to_csv(self) -> str:
        lines = [
            "conn_id,subflow_id,src_addr,dst_addr,src_port,dst_port,"
            "path_nodes,packetins,rules_installed,failed"
        ]
        for r in self.records:
            nodes = "-".join(map(str, r.path.nodes)) if r.path else ""
            lines.append(
                f"{r.conn_id},{r.subflow_id},{r.src_addr},{r.dst_addr},"
                f"{r.src_port},{r.dst_port},{nodes},{r.packet_ins},"
                f"{r.rules_installed},{int(r.failed)}"
            )
        return "\n".join(lines) + "\n"


def _route(
    fabric: Fabric,
    packet: SetupPacket,
    controller,
    clock: LogicalClock,
    stats: dict,
) -> bool:
    """Carry one packet hop by hop to its destination host.

    Returns False when the controller cannot supply a path for a setup packet.
    """
    topo = fabric.topology
    node = topo.interface(packet.src_addr).switch
    dst_host = topo.interface(packet.dst_addr).host
    redirected_at = None
    clock.advance(HOP_MS)  # host -> first switch
    while True:
        out = fabric.switches[node].forward(packet.match(), clock.now_ms)
        if out is None:
            if not wire.is_setup_packet(packet):
                raise ForwardingError(
                    f"packet {packet.match()} missed rules at switch {node}"
                )
            if redirected_at == node:
                raise ForwardingError(
                    f"installed rules for {packet.match()} do not cover switch {node}"
                )
            redirected_at = node
            stats["packet_ins"] += 1
            assignment = controller.handle_setup_packet(packet, clock.now_ms)
            clock.advance(CONTROLLER_MS)
            if assignment is None:
                return False
            fabric.install(assignment.rules, clock.now_ms)
            stats["rules"] += len(assignment.rules)
            stats["path"] = assignment.path
            continue  # resume at the same switch, rules now present
        clock.advance(HOP_MS)
        if out == dst_host:
            return True
        node = out


def run_handshakes(
    topo: Topology,
    connection_specs,
    controller,
    clock: LogicalClock | None = None,
    rng: random.Random | None = None,
    fabric: Fabric | None = None,
) -> HandshakeTrace:
    """Simulate the full setup exchange of every subflow, in listed order.

    Each subflow is driven to completion (SYN, reply, final ACK) before the
    next one starts; connections run in index order.
    """
    clock = clock or LogicalClock()
    rng = rng or random.Random(0)
    fabric = fabric or Fabric(topo)
    endpoints: dict[int, wire.HandshakeEndpoint] = {}

    def endpoint(host: int) -> wire.HandshakeEndpoint:
        if host not in endpoints:
            endpoints[host] = wire.HandshakeEndpoint(host, rng)
        return endpoints[host]

    trace = HandshakeTrace()
    for conn in connection_specs:
        initiator = endpoint(conn.src_host)
        token: int | None = None
        for sf_id, sf in enumerate(conn.subflows):
            if sf.is_initial:
                syn = initiator.open_initial(
                    sf.src_addr, sf.dst_addr, sf.src_port, sf.dst_port
                )
                token = wire.compute_token(syn.option.key)
            else:
                assert token is not None, "join before the initial subflow"
                syn = initiator.open_join(
                    token, sf.src_addr, sf.dst_addr, sf.src_port, sf.dst_port
                )
            stats = {"packet_ins": 0, "rules": 0, "path": None}
            failed = False
            packet: SetupPacket | None = syn
            try:
                while packet is not None:
                    if not _route(fabric, packet, controller, clock, stats):
                        failed = True
                        break
                    receiver = endpoint(
                        topo.interface(packet.dst_addr).host
                    )
                    packet = wire.handshake_step(receiver, packet)
            except wire.SubflowRejectedError:
                failed = True
            trace.records.append(
                SubflowRecord(
                    conn.conn_id, sf_id, sf.src_addr, sf.dst_addr,
                    sf.src_port, sf.dst_port, stats["path"],
                    stats["packet_ins"], stats["rules"], failed,
                )
            )
    return trace
