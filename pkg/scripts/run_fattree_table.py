#!/usr/bin/env python3
"""Average-throughput grid on the 8-ary three-layer fabric.

Sweeps 1..6 subflows for the deterministic Disjoint(4) assignment and the
random all-shortest assignment (flow-based ECMP behavior), under both the
permutation and the unconstrained traffic matrices. Writes summary/rank CSVs
and prints the combined grid.
"""

import argparse

from mptcplab import harness


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--seeds", type=int, default=10)
    parser.add_argument("--subflows", default="1..6")
    parser.add_argument("--out", default="results/fattree")
    args = parser.parse_args()

    from mptcplab.cli import parse_subflows

    counts = parse_subflows(args.subflows)
    rows = []
    for pattern in ("pt", "ut"):
        for mode, path_mode, k, label in (
            ("m", "k-edge-disjoint", 4, "M-Disjoint(4)"),
            ("r", "shortest", 16, "R-Shortest(16)"),
        ):
            config = harness.ExperimentConfig(
                topology="fattree:k=8",
                traffic=pattern,
                mode=mode,
                path_mode=path_mode,
                k=k,
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
