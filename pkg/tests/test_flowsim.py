import math
import random

import pytest

from oracles import lp_maxmin, random_fill_instance

from mptcplab.flowsim import (
    AllocationResult,
    SubflowPlacement,
    aggregate_runs,
    allocate,
    allocation_csv,
    fill_rates,
    optimal_throughput,
    report,
)
from mptcplab.pathing import Path
from mptcplab.topology import Interface, Topology, build_dh_jellyfish, build_fattree
from mptcplab.traffic import expand_connections, gen_permutation
from mptcplab.controller import Controller, RoutingConfig
from mptcplab.fabric import Fabric, LogicalClock, run_handshakes


def diamond_topology():
    # h0 - s2 - {s3 | s4} - s5 - h1
    return Topology(
        kind="jellyfish",
        hosts=[0, 1],
        switches=[2, 3, 4, 5],
        interfaces=[Interface(0, 1, 2), Interface(1, 2, 5)],
        core_links={(2, 3), (2, 4), (3, 5), (4, 5)},
        params={"n_hosts": 2, "n_switches": 4},
    )


class TestFillRates:
    def test_two_flows_one_link(self):
        assert fill_rates([1.0], [[0], [0]]) == [0.5, 0.5]

    def test_three_flow_chain(self):
        # A on L0, B on L0+L1, C on L1, unit capacities
        rates = fill_rates([1.0, 1.0], [[0], [0, 1], [1]])
        assert rates == pytest.approx([0.5, 0.5, 0.5])

    def test_three_flow_chain_wide_second_link(self):
        rates = fill_rates([1.0, 2.0], [[0], [0, 1], [1]])
        assert rates == pytest.approx([0.5, 0.5, 1.5])

    def test_placement_order_invariance(self):
        rng = random.Random(31)
        caps, flows = random_fill_instance(rng)
        base = fill_rates(caps, flows)
        perm = list(range(len(flows)))
        rng.shuffle(perm)
        shuffled = fill_rates(caps, [flows[i] for i in perm])
        for new_pos, old_pos in enumerate(perm):
            assert shuffled[new_pos] == pytest.approx(base[old_pos], abs=1e-12)

    def test_feasibility_and_bottleneck_certificate(self):
        rng = random.Random(77)
        for _ in range(50):
            caps, flows = random_fill_instance(rng)
            rates = fill_rates(caps, flows)
            load = [0.0] * len(caps)
            for links, rate in zip(flows, rates):
                for l in links:
                    load[l] += rate
            assert all(load[l] <= caps[l] + 1e-9 for l in range(len(caps)))
            for links in flows:
                assert any(load[l] >= caps[l] - 1e-9 for l in links)

    def test_matches_lp_oracle(self):
        rng = random.Random(123)
        for _ in range(10):
            caps, flows = random_fill_instance(rng)
            got = fill_rates(caps, flows)
            want = lp_maxmin(caps, flows)
            for g, w in zip(got, want):
                assert abs(g - w) <= 1e-9 * max(1.0, abs(w))

    def test_monotone_harm_on_shared_link(self):
        # adding a subflow to a saturated link never helps the flows crossing
        # that link (flows elsewhere MAY gain: the newcomer can depress a
        # competitor that was holding them back, so only this weaker form holds)
        rng = random.Random(404)
        for _ in range(20):
            caps, flows = random_fill_instance(rng)
            before = fill_rates(caps, flows)
            load = [0.0] * len(caps)
            for links, rate in zip(flows, before):
                for l in links:
                    load[l] += rate
            saturated = [l for l in range(len(caps)) if load[l] >= caps[l] - 1e-9]
            if not saturated:
                continue
            hot = saturated[0]
            after = fill_rates(caps, flows + [[hot]])
            for links, b, a in zip(flows, before, after):
                if hot in links:
                    assert a <= b + 1e-9

    def test_rejects_linkless_flow(self):
        with pytest.raises(ValueError):
            fill_rates([1.0], [[]])

    def test_empty(self):
        assert fill_rates([1.0], []) == []


class TestAllocate:
    def test_empty_placements(self):
        result = allocate(build_fattree(2), [])
        assert result.subflow_rates == {}
        assert result.connection_throughput == {}

    def test_access_link_caps_connection(self):
        topo = diamond_topology()
        p1 = Path((0, 2, 3, 5, 1))
        p2 = Path((0, 2, 4, 5, 1))
        result = allocate(topo, [SubflowPlacement(0, 0, p1), SubflowPlacement(0, 1, p2)])
        assert result.subflow_rates[(0, 0)] == pytest.approx(0.5)
        assert result.subflow_rates[(0, 1)] == pytest.approx(0.5)
        assert result.connection_throughput[0] == pytest.approx(1.0)

    def test_direction_pools_are_independent(self):
        # opposite-direction connections do not contend on the same link
        topo = diamond_topology()
        fwd = Path((0, 2, 3, 5, 1))
        rev = Path((1, 5, 3, 2, 0))
        result = allocate(topo, [SubflowPlacement(0, 0, fwd), SubflowPlacement(1, 0, rev)])
        assert result.connection_throughput[0] == pytest.approx(1.0)
        assert result.connection_throughput[1] == pytest.approx(1.0)

    def test_no_link_over_capacity(self):
        topo = build_fattree(4)
        matrix = gen_permutation(topo, seed=6)
        specs = expand_connections(matrix, topo, 3)
        ctrl = Controller(topo, RoutingConfig("deterministic", "k-edge-disjoint", 2))
        trace = run_handshakes(topo, specs, ctrl, LogicalClock(), fabric=Fabric(topo))
        result = allocate(topo, trace.placements())
        for load in result.link_load.values():
            assert load <= topo.link_capacity + 1e-9

    def test_pt_connections_capped_at_optimal(self):
        topo = build_fattree(4)
        matrix = gen_permutation(topo, seed=8)
        specs = expand_connections(matrix, topo, 2)
        ctrl = Controller(topo, RoutingConfig("deterministic", "k-edge-disjoint", 2))
        trace = run_handshakes(topo, specs, ctrl, LogicalClock(), fabric=Fabric(topo))
        rep = report(allocate(topo, trace.placements()), topo)
        assert all(pct <= 100.0 + 1e-9 for pct in rep.ranks_pct)


class TestReport:
    def test_all_at_capacity(self):
        result = AllocationResult({(0, 0): 1.0, (1, 0): 1.0},
                                  {0: 1.0, 1: 1.0}, {}, 1.0)
        rep = report(result, build_fattree(2))
        assert rep.average_pct == pytest.approx(100.0)
        assert rep.worst_pct == pytest.approx(100.0)

    def test_dual_homed_normalization(self):
        topo = build_dh_jellyfish(4, 2, 10, seed=0)
        assert optimal_throughput(topo) == pytest.approx(2.0)
        result = AllocationResult({(0, 0): 1.3}, {0: 1.3}, {}, 1.0)
        rep = report(result, topo)
        assert rep.average_pct == pytest.approx(65.0)

    def test_empty_flagged(self):
        rep = report(AllocationResult({}, {}, {}, 1.0), build_fattree(2))
        assert math.isnan(rep.average_pct)
        assert rep.ranks_pct == []

    def test_ranks_ascending(self):
        result = AllocationResult({}, {0: 0.3, 1: 0.9, 2: 0.5}, {}, 1.0)
        rep = report(result, build_fattree(2))
        assert rep.ranks_pct == sorted(rep.ranks_pct)
        assert rep.worst_pct == pytest.approx(30.0)


class TestAggregate:
    def make(self, avg, ranks):
        from mptcplab.flowsim import ThroughputReport

        return ThroughputReport(avg, ranks, ranks[0], 1.0)

    def test_identical_reports(self):
        r = self.make(90.0, [80.0, 100.0])
        agg = aggregate_runs([r, r, r])
        assert agg.average_pct == pytest.approx(90.0)
        assert agg.ranks_pct == pytest.approx([80.0, 100.0])

    def test_mean_of_two(self):
        agg = aggregate_runs([self.make(80.0, [80.0]), self.make(100.0, [100.0])])
        assert agg.average_pct == pytest.approx(90.0)

    def test_shape_mismatch(self):
        with pytest.raises(ValueError):
            aggregate_runs([self.make(1.0, [1.0]), self.make(1.0, [1.0, 2.0])])

    def test_empty(self):
        with pytest.raises(ValueError):
            aggregate_runs([])


def test_allocation_csv_format():
    result = AllocationResult({}, {1: 0.5, 0: 1.0}, {}, 1.0)
    lines = allocation_csv(result, optimal=1.0).strip().splitlines()
    assert lines[0] == "conn_id,throughput,percent_of_optimal"
    assert lines[1].startswith("0,1.000000000,100.")
    assert lines[2].startswith("1,0.500000000,50.")
