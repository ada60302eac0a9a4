"""Experiment runner: sweep topology x traffic x routing x subflow count,
execute seeded runs end to end, and emit summary tables plus CSV artifacts.
"""

from __future__ import annotations

import os
import random
from dataclasses import dataclass, field

from . import flowsim, traffic
from .controller import Controller, RoutingConfig
from .fabric import Fabric, LogicalClock, run_handshakes
from .flowsim import ThroughputReport
from .topology import (
    Topology,
    build_dh_jellyfish,
    build_fattree,
    build_jellyfish,
)

DEFAULT_JELLYFISH_PORTS = 12
OUT_DIR_ENV = "MPTCPLAB_OUT"


@dataclass
class ExperimentConfig:
    topology: str  # "fattree:k=8" | "jellyfish:hosts=..,switches=..[,ports=..]" | "dhjellyfish:..."
    traffic: str = "pt"  # "pt" | "ut"
    mode: str = "m"  # "m" (deterministic) | "r" (random)
    path_mode: str = "k-edge-disjoint"
    k: int = 8
    subflow_counts: list[int] = field(default_factory=lambda: [1, 2, 3, 4, 5, 6])
    per_pair: int | None = None  # fixed per-address-pair count for dual-homed runs
    seeds: int = 10
    seed_base: int = 0
    out_dir: str | None = None
    label: str | None = None
    hop_slack: int = 2


@dataclass
class ResultRow:
    label: str
    pattern: str
    subflows: int
    avg_pct: float
    worst_pct: float
    rules: float
    packet_ins: float
    tm_queries: float
    ranks_pct: list[float] = field(default_factory=list)


@dataclass
class ComparisonRow:
    subflows: int
    delta_avg: float
    delta_worst: float
    improvement_avg_pct: float
    improvement_worst_pct: float


@dataclass
class RuleBudget:
    n_hosts: int
    pair_count: int
    subflows_high_total: int
    subflows_low_total: int
    subflows_saved: int
    rules_high: int
    rules_low: int
    per_switch_rules_high: float
    tcam_limit: int
    tcam_exceeded: bool


def parse_topology_spec(spec: str) -> tuple[str, dict[str, int]]:
    kind, _, rest = spec.partition(":")
    params: dict[str, int] = {}
    if rest:
        for item in rest.split(","):
            key, _, value = item.partition("=")
            if not value:
                raise ValueError(f"bad topology parameter {item!r} in {spec!r}")
            params[key.strip()] = int(value)
    return kind.strip().lower(), params


def build_topology(spec: str, seed: int = 0) -> Topology:
    kind, params = parse_topology_spec(spec)
    if kind == "fattree":
        return build_fattree(params["k"])
    if kind in ("jellyfish", "dhjellyfish", "dh-jellyfish"):
        hosts = params["hosts"]
        switches = params["switches"]
        ports = params.get("ports", DEFAULT_JELLYFISH_PORTS)
        builder = build_jellyfish if kind == "jellyfish" else build_dh_jellyfish
        return builder(hosts, switches, ports, seed)
    raise ValueError(f"unknown topology kind {kind!r}")


def config_label(config: ExperimentConfig) -> str:
    if config.label:
        return config.label
    prefix = "M" if config.mode == "m" else "R"
    if config.path_mode == "shortest":
        suffix = "Shortest(all)"
    elif config.path_mode == "k-shortest":
        suffix = f"Shortest({config.k})"
    else:
        suffix = f"Disjoint({config.k})"
    return f"{prefix}-{suffix}"


def _derived_rng(seed: int, tag: str) -> random.Random:
    return random.Random(f"{seed}:{tag}")


def run_cell(
    config: ExperimentConfig, subflows: int, seed: int
) -> tuple[ThroughputReport, dict[str, float]]:
    """One (config, subflow count, seed) simulation: build, route, allocate."""
    topo = build_topology(config.topology, seed=seed)
    if config.traffic == "pt":
        matrix = traffic.gen_permutation(topo, seed)
    elif config.traffic == "ut":
        matrix = traffic.gen_unconstrained(topo, seed)
    else:
        raise ValueError(f"unknown traffic pattern {config.traffic!r}")

    count = subflows
    if config.per_pair is not None and topo.interfaces_per_host() > 1:
        count = config.per_pair
    specs = traffic.expand_connections(matrix, topo, count)

    routing = RoutingConfig(
        assignment_mode="deterministic" if config.mode == "m" else "random",
        path_mode=config.path_mode,
        k=config.k,
        rng_seed=_derived_rng(seed, "assign").getrandbits(32),
        hop_slack=config.hop_slack,
    )
    ctrl = Controller(topo, routing)
    fabric = Fabric(topo)
    clock = LogicalClock()
    trace = run_handshakes(
        topo, specs, ctrl, clock, rng=_derived_rng(seed, "keys"), fabric=fabric
    )
    alloc = flowsim.allocate(topo, trace.placements())
    rep = flowsim.report(alloc, topo)
    counters = {
        "rules": float(ctrl.metrics.rules_issued),
        "packet_ins": float(ctrl.metrics.packet_ins),
        "tm_queries": float(ctrl.metrics.tm_queries),
        "established": float(trace.established_count),
    }
    return rep, counters


def run_experiment(config: ExperimentConfig) -> list[ResultRow]:
    """Sweep subflow counts x seeds, aggregate per count, write artifacts."""
    if config.seeds < 1:
        raise ValueError("need at least one seed")
    label = config_label(config)
    rows: list[ResultRow] = []
    for s in config.subflow_counts:
        reports = []
        counter_sums = {"rules": 0.0, "packet_ins": 0.0, "tm_queries": 0.0}
        for i in range(config.seeds):
            rep, counters = run_cell(config, s, config.seed_base + i)
            reports.append(rep)
            for key in counter_sums:
                counter_sums[key] += counters[key]
        agg = flowsim.aggregate_runs(reports)
        rows.append(
            ResultRow(
                label=label,
                pattern=config.traffic,
                subflows=s,
                avg_pct=agg.average_pct,
                worst_pct=agg.worst_pct,
                rules=counter_sums["rules"] / config.seeds,
                packet_ins=counter_sums["packet_ins"] / config.seeds,
                tm_queries=counter_sums["tm_queries"] / config.seeds,
                ranks_pct=agg.ranks_pct,
            )
        )
    if config.out_dir:
        write_artifacts(config.out_dir, rows)
    return rows


def summary_csv(rows: list[ResultRow]) -> str:
    lines = ["label,pattern,subflows,avg_pct,worst_pct,rules,packetins,tm_queries"]
    for r in rows:
        lines.append(
            f"{r.label},{r.pattern},{r.subflows},{r.avg_pct:.4f},{r.worst_pct:.4f},"
            f"{r.rules:.2f},{r.packet_ins:.2f},{r.tm_queries:.2f}"
        )
    return "\n".join(lines) + "\n"


def _safe(label: str) -> str:
    return "".join(c if c.isalnum() else "_" for c in label)


def write_artifacts(out_dir: str, rows: list[ResultRow]) -> None:
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "summary.csv")
    exists = os.path.exists(path)
    with open(path, "a") as fh:
        text = summary_csv(rows)
        fh.write(text if not exists else "".join(text.splitlines(keepends=True)[1:]))
    for r in rows:
        rank_path = os.path.join(
            out_dir, f"ranks_{_safe(r.label)}_{r.pattern}_{r.subflows}.csv"
        )
        with open(rank_path, "w") as fh:
            fh.write("rank,pct_of_optimal\n")
            for i, pct in enumerate(r.ranks_pct):
                fh.write(f"{i},{pct:.6f}\n")


def render_table(rows: list[ResultRow]) -> str:
    """Pivot rows into a subflows x (label, pattern) average-throughput table."""
    columns = sorted({(r.label, r.pattern) for r in rows})
    counts = sorted({r.subflows for r in rows})
    cells = {(r.subflows, (r.label, r.pattern)): r.avg_pct for r in rows}
    header = ["Subflows"] + [f"{lab} {pat.upper()}" for lab, pat in columns]
    widths = [max(10, len(h) + 2) for h in header]
    out = ["".join(h.ljust(w) for h, w in zip(header, widths))]
    for s in counts:
        cells_row = [str(s)]
        for col in columns:
            v = cells.get((s, col))
            cells_row.append("-" if v is None else f"{v:.1f}%")
        out.append("".join(c.ljust(w) for c, w in zip(cells_row, widths)))
    return "\n".join(out)


def compare(rows_a: list[ResultRow], rows_b: list[ResultRow]) -> list[ComparisonRow]:
    """Per-subflow-count deltas of a over b, with relative improvements."""
    by_count_b = {r.subflows: r for r in rows_b}
    if sorted(r.subflows for r in rows_a) != sorted(by_count_b):
        raise ValueError("subflow sweeps do not match")
    out = []
    for ra in sorted(rows_a, key=lambda r: r.subflows):
        rb = by_count_b[ra.subflows]
        out.append(
            ComparisonRow(
                subflows=ra.subflows,
                delta_avg=ra.avg_pct - rb.avg_pct,
                delta_worst=ra.worst_pct - rb.worst_pct,
                improvement_avg_pct=100.0 * (ra.avg_pct - rb.avg_pct) / rb.avg_pct,
                improvement_worst_pct=100.0 * (ra.worst_pct - rb.worst_pct) / rb.worst_pct,
            )
        )
    return out


def rule_budget_report(
    n_hosts: int,
    subflows_high: int,
    subflows_low: int,
    switches_per_path: int = 5,
    n_switches: int | None = None,
    tcam_limit: int = 64_000,
) -> RuleBudget:
    """Projected all-pairs subflow and rule totals for two per-connection
    subflow counts, plus a TCAM headroom check."""
    pairs = n_hosts * (n_hosts - 1)
    high_total = pairs * subflows_high
    low_total = pairs * subflows_low
    rules_high = high_total * 2 * switches_per_path
    rules_low = low_total * 2 * switches_per_path
    per_switch = rules_high / n_switches if n_switches else 0.0
    return RuleBudget(
        n_hosts=n_hosts,
        pair_count=pairs,
        subflows_high_total=high_total,
        subflows_low_total=low_total,
        subflows_saved=high_total - low_total,
        rules_high=rules_high,
        rules_low=rules_low,
        per_switch_rules_high=per_switch,
        tcam_limit=tcam_limit,
        tcam_exceeded=per_switch > tcam_limit,
    )
