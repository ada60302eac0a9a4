#!/usr/bin/env python3
"""Average-throughput grid on the random-core fabric (120 hosts, 60 switches).

Deterministic vs random assignment, over 8-edge-disjoint and 8-shortest path
sets, permutation and unconstrained traffic, 1..6 subflows.
"""

import argparse

from mptcplab import harness


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=10)
    parser.add_argument("--subflows", default="1..6")
    parser.add_argument("--ports", type=int, default=12, help="switch port count")
    parser.add_argument("--out", default="results/jellyfish")
    args = parser.parse_args()

    from mptcplab.cli import parse_subflows

    counts = parse_subflows(args.subflows)
    topo = f"jellyfish:hosts=120,switches=60,ports={args.ports}"
    rows = []
    for pattern in ("pt", "ut"):
        for mode in ("m", "r"):
            for path_mode, label_stem in (
                ("k-edge-disjoint", "Disjoint(8)"),
                ("k-shortest", "Shortest(8)"),
            ):
                label = f"{mode.upper()}-{label_stem}"
                config = harness.ExperimentConfig(
                    topology=topo,
                    traffic=pattern,
                    mode=mode,
                    path_mode=path_mode,
                    k=8,
                    subflow_counts=counts,
                    seeds=args.seeds,
                    out_dir=args.out,
                    label=label,
                )
                rows.extend(harness.run_experiment(config))
                print(f"done: {label} {pattern.upper()}")
    print()
    print(harness.render_table(rows))
    print(f"\nCSV artifacts in {args.out}/")


if __name__ == "__main__":
    main()
