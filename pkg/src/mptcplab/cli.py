"""Command-line front end for the experiment harness."""

from __future__ import annotations

import argparse
import os
import sys

from . import harness


def parse_subflows(text: str) -> list[int]:
    """Accept '4', '2,3,4', or '1..6'."""
    text = text.strip()
    if ".." in text:
        lo, hi = text.split("..")
        return list(range(int(lo), int(hi) + 1))
    return [int(part) for part in text.split(",") if part]


def parse_paths(text: str) -> tuple[str, int]:
    """Accept 'shortest', 'kshortest:k=8', or 'disjoint:k=8'."""
    name, _, rest = text.partition(":")
    k = 8
    if rest:
        key, _, value = rest.partition("=")
        if key != "k" or not value:
            raise ValueError(f"bad path spec {text!r}")
        k = int(value)
    name = name.strip().lower()
    if name == "shortest":
        return "shortest", k
    if name == "kshortest":
        return "k-shortest", k
    if name == "disjoint":
        return "k-edge-disjoint", k
    raise ValueError(f"unknown path mode {name!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mptcplab",
        description="Flow-level lab for MPTCP subflow routing on SDN fabrics",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run one experiment sweep")
    run_p.add_argument(
        "--topology", required=True,
        help="fattree:k=8 | jellyfish:hosts=120,switches=60,ports=12 | dhjellyfish:...",
    )
    run_p.add_argument("--traffic", choices=["pt", "ut"], default="pt")
    run_p.add_argument("--mode", choices=["m", "r"], default="m",
                       help="m = deterministic (MPTCP-aware), r = random")
    run_p.add_argument("--paths", default="disjoint:k=8",
                       help="shortest | kshortest:k=8 | disjoint:k=8")
    run_p.add_argument("--subflows", default="1..6",
                       help="subflow counts to sweep: '4', '2,3,4', or '1..6'")
    run_p.add_argument("--per-pair", type=int, default=None,
                       help="fixed subflows per address pair (dual-homed hosts)")
    run_p.add_argument("--seeds", type=int, default=10)
    run_p.add_argument("--seed-base", type=int, default=0)
    run_p.add_argument("--out", default=os.environ.get(harness.OUT_DIR_ENV),
                       help=f"output directory (default ${harness.OUT_DIR_ENV})")
    run_p.add_argument("--label", default=None, help="override the column label")
    run_p.add_argument("--hop-slack", type=int, default=2,
                       help="path search bound: shortest hops + slack")

    budget_p = sub.add_parser("rule-budget", help="projected rule/subflow totals")
    budget_p.add_argument("--hosts", type=int, required=True)
    budget_p.add_argument("--high", type=int, required=True,
                          help="higher per-connection subflow count")
    budget_p.add_argument("--low", type=int, required=True,
                          help="lower per-connection subflow count")
    budget_p.add_argument("--switches-per-path", type=int, default=5)
    budget_p.add_argument("--n-switches", type=int, default=None)
    budget_p.add_argument("--tcam", type=int, default=64_000)
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "run":
        path_mode, k = parse_paths(args.paths)
        config = harness.ExperimentConfig(
            topology=args.topology,
            traffic=args.traffic,
            mode=args.mode,
            path_mode=path_mode,
            k=k,
            subflow_counts=parse_subflows(args.subflows),
            per_pair=args.per_pair,
            seeds=args.seeds,
            seed_base=args.seed_base,
            out_dir=args.out,
            label=args.label,
            hop_slack=args.hop_slack,
        )
        rows = harness.run_experiment(config)
        print(harness.render_table(rows))
        if args.out:
            print(f"artifacts written to {args.out}")
        return 0
    if args.command == "rule-budget":
        budget = harness.rule_budget_report(
            args.hosts, args.high, args.low,
            switches_per_path=args.switches_per_path,
            n_switches=args.n_switches,
            tcam_limit=args.tcam,
        )
        print(f"host pairs:            {budget.pair_count}")
        print(f"subflows at {args.high}/conn:     {budget.subflows_high_total}")
        print(f"subflows at {args.low}/conn:     {budget.subflows_low_total}")
        print(f"subflows saved:        {budget.subflows_saved}")
        print(f"rules at {args.high}/conn:        {budget.rules_high}")
        print(f"rules at {args.low}/conn:        {budget.rules_low}")
        if args.n_switches:
            print(f"per-switch rules:      {budget.per_switch_rules_high:.0f} "
                  f"({'OVER' if budget.tcam_exceeded else 'within'} {budget.tcam_limit} TCAM)")
        return 0
    return 2


if __name__ == "__main__":
    sys.exit(main())
