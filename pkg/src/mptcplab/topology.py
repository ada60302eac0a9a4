"""Datacenter topology construction: FatTree, Jellyfish, and dual-homed Jellyfish.

Nodes are plain integers. Hosts are numbered first, switches after them, so
host ids always sort below switch ids within one topology. Every host
attachment point is an Interface carrying a unique 32-bit address; switch-to-
switch wiring is kept in ``core_links``. All links in a topology share one
capacity.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

CONNECTIVITY_RETRIES = 100
_ADDR_BASE = 1  # addresses are opaque; keep 0 free as a sentinel


class TopologyError(ValueError):
    """Requested topology cannot be constructed from the given parameters."""


class UnknownAddressError(LookupError):
    """Address does not belong to any interface of the topology."""


@dataclass(frozen=True)
class Interface:
    """One host attachment point: (host, address, switch it plugs into)."""

    host: int
    address: int
    switch: int


@dataclass
class Topology:
    kind: str  # "fattree" | "jellyfish" | "dh-jellyfish"
    hosts: list[int]
    switches: list[int]
    interfaces: list[Interface]
    core_links: set[tuple[int, int]]  # switch-switch, stored as (lo, hi)
    seed: int = 0
    link_capacity: float = 1.0
    params: dict = field(default_factory=dict)

    def __post_init__(self) -> None:
        self._host_set = set(self.hosts)
        self._switch_set = set(self.switches)
        self._by_addr = {i.address: i for i in self.interfaces}
        self._by_host: dict[int, list[Interface]] = {}
        for iface in self.interfaces:
            self._by_host.setdefault(iface.host, []).append(iface)
        for ifaces in self._by_host.values():
            ifaces.sort(key=lambda i: i.address)
        adj: dict[int, list[int]] = {n: [] for n in self.hosts + self.switches}
        for a, b in self.core_links:
            adj[a].append(b)
            adj[b].append(a)
        for iface in self.interfaces:
            adj[iface.host].append(iface.switch)
            adj[iface.switch].append(iface.host)
        self._adj = {n: sorted(vs) for n, vs in adj.items()}
        self._switch_adj = {
            s: [v for v in self._adj[s] if v in self._switch_set] for s in self.switches
        }

    @property
    def n_hosts(self) -> int:
        return len(self.hosts)

    @property
    def n_switches(self) -> int:
        return len(self.switches)

    def is_host(self, node: int) -> bool:
        return node in self._host_set

    def is_switch(self, node: int) -> bool:
        return node in self._switch_set

    def neighbors(self, node: int) -> list[int]:
        return self._adj[node]

    def switch_neighbors(self, switch: int) -> list[int]:
        return self._switch_adj[switch]

    def degree(self, node: int) -> int:
        return len(self._adj[node])

    def interface(self, address: int) -> Interface:
        try:
            return self._by_addr[address]
        except KeyError:
            raise UnknownAddressError(f"no interface with address {address}") from None

    def interfaces_of(self, host: int) -> list[Interface]:
        return self._by_host.get(host, [])

    def all_links(self) -> list[tuple[int, int]]:
        """Core links plus host access links, normalized (lo, hi)."""
        access = {
            (min(i.host, i.switch), max(i.host, i.switch)) for i in self.interfaces
        }
        return sorted(access | self.core_links)

    def interfaces_per_host(self) -> int:
        return len(self.interfaces) // len(self.hosts) if self.hosts else 0


def _norm(a: int, b: int) -> tuple[int, int]:
    return (a, b) if a < b else (b, a)


def build_fattree(k: int) -> Topology:
    """Three-level k-ary FatTree: k pods of k/2 edge + k/2 aggregation switches."""
    if k < 2 or k % 2 != 0:
        raise TopologyError(f"fattree arity must be a positive even integer, got {k}")
    half = k // 2
    n_hosts = k**3 // 4
    edge0 = n_hosts
    agg0 = edge0 + k * half
    core0 = agg0 + k * half
    n_core = half * half
    hosts = list(range(n_hosts))
    switches = list(range(edge0, core0 + n_core))

    interfaces: list[Interface] = []
    core_links: set[tuple[int, int]] = set()
    addr = _ADDR_BASE
    for pod in range(k):
        for e in range(half):
            edge_sw = edge0 + pod * half + e
            for h in range(half):
                host = pod * half * half + e * half + h
                interfaces.append(Interface(host, addr, edge_sw))
                addr += 1
            for a in range(half):
                core_links.add(_norm(edge_sw, agg0 + pod * half + a))
        for a in range(half):
            agg_sw = agg0 + pod * half + a
            for c in range(half):
                core_links.add(_norm(agg_sw, core0 + a * half + c))

    return Topology(
        kind="fattree",
        hosts=hosts,
        switches=switches,
        interfaces=interfaces,
        core_links=core_links,
        seed=0,
        params={"k": k},
    )


def _attach_round_robin(n_hosts: int, n_switches: int) -> list[int]:
    # host i lands on switch i % S: per-switch load is ceil(N/S) or floor(N/S)
    return [i % n_switches for i in range(n_hosts)]


def _pair_free_ports(
    switch_ids: list[int], free: dict[int, int], links: set[tuple[int, int]], rng: random.Random
) -> None:
    """Randomly wire free switch ports, no self-pairs or duplicate pairs, then
    absorb leftovers by rewiring existing links through port-rich switches."""
    open_switches = [s for s in switch_ids if free[s] > 0]

    def rebuild_open() -> None:
        open_switches[:] = [s for s in switch_ids if free[s] > 0]

    while True:
        rebuild_open()
        if len(open_switches) < 2:
            break
        placed = False
        # rejection sampling first, exhaustive fallback when the pool thins out
        for _ in range(64):
            u, v = rng.sample(open_switches, 2)
            if _norm(u, v) not in links:
                links.add(_norm(u, v))
                free[u] -= 1
                free[v] -= 1
                placed = True
                break
        if not placed:
            candidates = [
                (u, v)
                for i, u in enumerate(open_switches)
                for v in open_switches[i + 1 :]
                if _norm(u, v) not in links
            ]
            if not candidates:
                break
            u, v = candidates[rng.randrange(len(candidates))]
            links.add(_norm(u, v))
            free[u] -= 1
            free[v] -= 1

    # leftover absorption: switch x with >= 2 free ports splices into a link (a, b)
    for _ in range(2 * len(switch_ids)):
        rich = [s for s in switch_ids if free[s] >= 2]
        if not rich:
            break
        progress = False
        for x in rich:
            choices = [
                (a, b)
                for (a, b) in sorted(links)
                if x not in (a, b)
                and _norm(x, a) not in links
                and _norm(x, b) not in links
            ]
            if not choices:
                continue
            a, b = choices[rng.randrange(len(choices))]
            links.remove((a, b))
            links.add(_norm(x, a))
            links.add(_norm(x, b))
            free[x] -= 2
            progress = True
        if not progress:
            break
    # any remaining free ports are unplaceable without multi-links; tolerated


def _switch_core_connected(switches: list[int], links: set[tuple[int, int]]) -> bool:
    if len(switches) <= 1:
        return True
    adj: dict[int, list[int]] = {s: [] for s in switches}
    for a, b in links:
        adj[a].append(b)
        adj[b].append(a)
    seen = {switches[0]}
    stack = [switches[0]]
    while stack:
        for v in adj[stack.pop()]:
            if v not in seen:
                seen.add(v)
                stack.append(v)
    return len(seen) == len(switches)


def _build_random_core(
    kind: str,
    n_hosts: int,
    n_switches: int,
    ports_per_switch: int,
    seed: int,
    dual_homed: bool,
) -> Topology:
    if n_hosts < 1 or n_switches < 1 or ports_per_switch < 1:
        raise TopologyError("host, switch, and port counts must be positive")
    attach_budget = (2 if dual_homed else 1) * n_hosts
    min_core = max(0, n_switches - 1)
    if n_switches * ports_per_switch < attach_budget + 2 * min_core:
        raise TopologyError(
            f"port budget too small: {n_switches}x{ports_per_switch} ports cannot host "
            f"{attach_budget} attachments plus a connected core"
        )
    bound = math.ceil(n_hosts / n_switches)
    switch_ids = list(range(n_hosts, n_hosts + n_switches))

    last_error = "random core never came out connected"
    for attempt in range(CONNECTIVITY_RETRIES):
        rng = random.Random(f"{seed}:{attempt}")
        first = _attach_round_robin(n_hosts, n_switches)
        attach_count = {s: 0 for s in switch_ids}
        interfaces: list[Interface] = []
        addr = _ADDR_BASE
        for host, si in enumerate(first):
            sw = switch_ids[si]
            interfaces.append(Interface(host, addr, sw))
            attach_count[sw] += 1
            addr += 1

        if dual_homed:
            second_count = {s: 0 for s in switch_ids}
            feasible = True
            for host, si in enumerate(first):
                first_sw = switch_ids[si]
                options = [
                    s for s in switch_ids if s != first_sw and second_count[s] < bound
                ]
                if not options:
                    feasible = False
                    break
                sw = options[rng.randrange(len(options))]
                interfaces.append(Interface(host, addr, sw))
                second_count[sw] += 1
                attach_count[sw] += 1
                addr += 1
            if not feasible:
                last_error = "no switch left for a second host interface"
                continue

        free = {s: ports_per_switch - attach_count[s] for s in switch_ids}
        if min(free.values()) < 0:
            raise TopologyError(
                f"host attachments exceed {ports_per_switch} ports on a switch"
            )
        links: set[tuple[int, int]] = set()
        _pair_free_ports(switch_ids, free, links, rng)
        if not _switch_core_connected(switch_ids, links):
            continue
        return Topology(
            kind=kind,
            hosts=list(range(n_hosts)),
            switches=switch_ids,
            interfaces=interfaces,
            core_links=links,
            seed=seed,
            params={
                "n_hosts": n_hosts,
                "n_switches": n_switches,
                "ports_per_switch": ports_per_switch,
            },
        )
    raise TopologyError(
        f"gave up after {CONNECTIVITY_RETRIES} attempts: {last_error}"
    )


def build_jellyfish(
    n_hosts: int, n_switches: int, ports_per_switch: int, seed: int = 0
) -> Topology:
    """Random-graph fabric: hosts spread round-robin, free ports paired at random."""
    return _build_random_core(
        "jellyfish", n_hosts, n_switches, ports_per_switch, seed, dual_homed=False
    )


def build_dh_jellyfish(
    n_hosts: int, n_switches: int, ports_per_switch: int, seed: int = 0
) -> Topology:
    """Jellyfish with a second, randomly placed interface per host (distinct switch)."""
    return _build_random_core(
        "dh-jellyfish", n_hosts, n_switches, ports_per_switch, seed, dual_homed=True
    )


def validate(topo: Topology) -> list[str]:
    """Return human-readable invariant violations; empty list means clean."""
    problems: list[str] = []
    addrs = [i.address for i in topo.interfaces]
    if len(addrs) != len(set(addrs)):
        problems.append("duplicate interface addresses")
    for iface in topo.interfaces:
        if not topo.is_host(iface.host):
            problems.append(f"interface address {iface.address} hangs off non-host {iface.host}")
        if not topo.is_switch(iface.switch):
            problems.append(f"interface address {iface.address} attached to non-switch {iface.switch}")
    for a, b in topo.core_links:
        if a == b:
            problems.append(f"self-loop at {a}")
        if not (topo.is_switch(a) and topo.is_switch(b)):
            problems.append(f"core link ({a},{b}) touches a non-switch")
    if topo.link_capacity <= 0:
        problems.append("non-positive link capacity")

    if topo.kind == "fattree":
        k = topo.params.get("k")
        if k is None:
            problems.append("fattree without arity parameter")
            return problems
        if topo.n_hosts != k**3 // 4:
            problems.append(f"fattree({k}) expects {k**3 // 4} hosts, found {topo.n_hosts}")
        if topo.n_switches != 5 * k * k // 4:
            problems.append(f"fattree({k}) expects {5 * k * k // 4} switches, found {topo.n_switches}")
        for s in topo.switches:
            if topo.degree(s) != k:
                problems.append(f"switch {s} uses {topo.degree(s)} ports, expected {k}")
        half = k // 2
        edge0 = topo.n_hosts
        for e in range(edge0, edge0 + k * half):
            attached = sum(1 for i in topo.interfaces if i.switch == e)
            if attached != half:
                problems.append(f"edge switch {e} hosts {attached} hosts, expected {half}")
    elif topo.kind in ("jellyfish", "dh-jellyfish"):
        n_hosts = topo.params.get("n_hosts", topo.n_hosts)
        n_switches = topo.params.get("n_switches", topo.n_switches)
        bound = math.ceil(n_hosts / n_switches) if n_switches else 0
        rounds = 2 if topo.kind == "dh-jellyfish" else 1
        per_switch: dict[int, int] = {}
        for iface in topo.interfaces:
            per_switch[iface.switch] = per_switch.get(iface.switch, 0) + 1
        for sw, count in sorted(per_switch.items()):
            if count > rounds * bound:
                problems.append(
                    f"switch {sw} carries {count} host attachments, bound is {rounds * bound}"
                )
        ports = topo.params.get("ports_per_switch")
        if ports is not None:
            for s in topo.switches:
                if topo.degree(s) > ports:
                    problems.append(f"switch {s} exceeds {ports} ports")
        if topo.kind == "dh-jellyfish":
            for host in topo.hosts:
                ifaces = topo.interfaces_of(host)
                if len(ifaces) != 2:
                    problems.append(f"host {host} has {len(ifaces)} interfaces, expected 2")
                elif ifaces[0].switch == ifaces[1].switch:
                    problems.append(f"host {host} interfaces share switch {ifaces[0].switch}")
        if not _switch_core_connected(topo.switches, topo.core_links):
            problems.append("switch core is disconnected")
    else:
        problems.append(f"unknown topology kind {topo.kind!r}")
    return problems


def export_text(topo: Topology) -> str:
    """Line-oriented dump: header, one line per interface, one line per core link."""
    if topo.kind == "fattree":
        tag = f"fattree({topo.params['k']})"
    else:
        tag = topo.kind
    lines = [f"{tag} {topo.n_hosts} {topo.n_switches} {topo.seed}"]
    for iface in sorted(topo.interfaces, key=lambda i: (i.host, i.address)):
        lines.append(f"{iface.host} {iface.switch} {iface.address}")
    for a, b in sorted(topo.core_links):
        lines.append(f"{a} {b}")
    return "\n".join(lines) + "\n"


def import_text(text: str) -> Topology:
    """Inverse of export_text."""
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise TopologyError("empty topology dump")
    head = lines[0].split()
    if len(head) != 4:
        raise TopologyError(f"malformed header: {lines[0]!r}")
    tag, n_hosts, n_switches, seed = head[0], int(head[1]), int(head[2]), int(head[3])
    params: dict = {}
    if tag.startswith("fattree(") and tag.endswith(")"):
        kind = "fattree"
        params["k"] = int(tag[len("fattree(") : -1])
    elif tag in ("jellyfish", "dh-jellyfish"):
        kind = tag
        params = {"n_hosts": n_hosts, "n_switches": n_switches}
    else:
        raise TopologyError(f"unknown kind tag {tag!r}")

    interfaces: list[Interface] = []
    core_links: set[tuple[int, int]] = set()
    for ln in lines[1:]:
        parts = ln.split()
        if len(parts) == 3:
            interfaces.append(Interface(int(parts[0]), int(parts[2]), int(parts[1])))
        elif len(parts) == 2:
            core_links.add(_norm(int(parts[0]), int(parts[1])))
        else:
            raise TopologyError(f"malformed line: {ln!r}")
    hosts = sorted({i.host for i in interfaces})
    switches = sorted(
        {i.switch for i in interfaces} | {n for link in core_links for n in link}
    )
    if len(hosts) != n_hosts or len(switches) != n_switches:
        raise TopologyError(
            f"header claims {n_hosts}/{n_switches} hosts/switches, "
            f"lines define {len(hosts)}/{len(switches)}"
        )
    return Topology(
        kind=kind,
        hosts=hosts,
        switches=switches,
        interfaces=interfaces,
        core_links=core_links,
        seed=seed,
        params=params,
    )
