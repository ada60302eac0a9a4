"""Fluid throughput model: progressive-filling max-min fairness per subflow.

Each placed subflow is an independent fluid flow over the directed links of
its path (links are full-duplex: each direction is a separate capacity pool).
All unfrozen flows grow at the same speed; when a link saturates, the flows
crossing it freeze; repeat until everything is frozen.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .pathing import Path
from .topology import Topology

SATURATION_EPS = 1e-12


@dataclass(frozen=True)
class SubflowPlacement:
    conn_id: int
    subflow_id: int
    path: Path


@dataclass
class AllocationResult:
    subflow_rates: dict[tuple[int, int], float]
    connection_throughput: dict[int, float]
    link_load: dict[tuple[int, int], float]  # directed (u, v) -> carried rate
    link_capacity: float


@dataclass
class ThroughputReport:
    average_pct: float  # NaN when there are no connections
    ranks_pct: list[float]  # per-connection %, ascending
    worst_pct: float
    optimal: float


def fill_rates(
    capacities: Sequence[float], flow_links: Sequence[Iterable[int]]
) -> list[float]:
    """Max-min rates for flows crossing the given link indices.

    Every flow must cross at least one link; capacities must be positive.
    """
    n_links = len(capacities)
    n_flows = len(flow_links)
    if n_flows == 0:
        return []
    matrix = np.zeros((n_links, n_flows))
    for j, links in enumerate(flow_links):
        idx = list(links)
        if not idx:
            raise ValueError(f"flow {j} crosses no links")
        matrix[idx, j] = 1.0
    cap = np.asarray(capacities, dtype=float)
    if np.any(cap <= 0):
        raise ValueError("capacities must be positive")

    rates = np.zeros(n_flows)
    active = np.ones(n_flows, dtype=bool)
    while active.any():
        counts = matrix @ active
        head = cap - matrix @ rates
        live = counts > 0
        delta = float(np.min(head[live] / counts[live]))
        if delta > 0:
            rates = rates + delta * np.where(active, 1.0, 0.0)
        head = cap - matrix @ rates
        saturated = live & (head <= SATURATION_EPS)
        frozen = (matrix[saturated].sum(axis=0) > 0) & active
        if not frozen.any():
            raise RuntimeError("progressive filling stalled")  # unreachable
        active &= ~frozen
    return rates.tolist()


def allocate(topo: Topology, placements: Sequence[SubflowPlacement]) -> AllocationResult:
    """Run progressive filling over the placements' directed link sets."""
    if not placements:
        return AllocationResult({}, {}, {}, topo.link_capacity)
    link_index: dict[tuple[int, int], int] = {}
    flow_links: list[list[int]] = []
    for pl in placements:
        idx = []
        for edge in pl.path.directed_links():
            if edge not in link_index:
                link_index[edge] = len(link_index)
            idx.append(link_index[edge])
        flow_links.append(idx)
    caps = [topo.link_capacity] * len(link_index)
    rates = fill_rates(caps, flow_links)

    subflow_rates: dict[tuple[int, int], float] = {}
    connection: dict[int, float] = {}
    for pl, rate in zip(placements, rates):
        subflow_rates[(pl.conn_id, pl.subflow_id)] = rate
        connection[pl.conn_id] = connection.get(pl.conn_id, 0.0) + rate
    load = {edge: 0.0 for edge in link_index}
    for pl, rate in zip(placements, rates):
        for edge in pl.path.directed_links():
            load[edge] += rate
    return AllocationResult(subflow_rates, connection, load, topo.link_capacity)


def optimal_throughput(topo: Topology) -> float:
    """Sum of one host's interface capacities (1x for single-homed, 2x dual)."""
    return topo.interfaces_per_host() * topo.link_capacity


def report(
    result: AllocationResult, topo: Topology, optimal: float | None = None
) -> ThroughputReport:
    """Per-connection throughput ranking as percentages of the optimal."""
    if optimal is None:
        optimal = optimal_throughput(topo)
    if not result.connection_throughput:
        return ThroughputReport(math.nan, [], math.nan, optimal)
    ranks = sorted(
        100.0 * t / optimal for t in result.connection_throughput.values()
    )
    return ThroughputReport(
        average_pct=sum(ranks) / len(ranks),
        ranks_pct=ranks,
        worst_pct=ranks[0],
        optimal=optimal,
    )


def aggregate_runs(reports: Sequence[ThroughputReport]) -> ThroughputReport:
    """Element-wise mean over same-shape per-seed reports."""
    if not reports:
        raise ValueError("nothing to aggregate")
    n = len(reports[0].ranks_pct)
    if any(len(r.ranks_pct) != n for r in reports):
        raise ValueError("rank vectors differ in length across runs")
    mean_ranks = [
        sum(r.ranks_pct[i] for r in reports) / len(reports) for i in range(n)
    ]
    return ThroughputReport(
        average_pct=sum(r.average_pct for r in reports) / len(reports),
        ranks_pct=mean_ranks,
        worst_pct=mean_ranks[0] if mean_ranks else math.nan,
        optimal=reports[0].optimal,
    )


def allocation_csv(result: AllocationResult, optimal: float) -> str:
    """CSV rows `conn_id,throughput,percent_of_optimal`, sorted by connection."""
    lines = ["conn_id,throughput,percent_of_optimal"]
    for cid in sorted(result.connection_throughput):
        t = result.connection_throughput[cid]
        lines.append(f"{cid},{t:.9f},{100.0 * t / optimal:.6f}")
    return "\n".join(lines) + "\n"
