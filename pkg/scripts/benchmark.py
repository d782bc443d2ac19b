#!/usr/bin/env python3
"""Accuracy/cost ladder: exact sampler vs Euler and improved Euler across a
grid-width ladder on the sinusoidal/linear problem.  Writes comparison.csv
and prints it as a table.
"""

from __future__ import annotations

import argparse

from fptsim.cli import DEFAULT_DELTAS, resolve_config, run_experiment


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n", type=int, default=10_000)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--out", default="out/benchmark")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument(
        "--deltas",
        type=float,
        nargs="+",
        default=list(DEFAULT_DELTAS),
        help="grid widths to benchmark",
    )
    args = ap.parse_args()

    cfg = resolve_config(
        {
            "experiment": "benchmark",
            "n": args.n,
            "seed": args.seed,
            "out": args.out,
            "workers": args.workers,
            "deltas": args.deltas,
        }
    )
    payload = run_experiment(cfg)
    print(f"{'delta':>12} {'method':>16} {'ks_D':>9} {'ks_p':>11} {'bias1':>10} {'wall_s':>8}")
    for row in payload["comparison"]:
        print(
            f"{row['delta']:>12.6g} {row['method']:>16} {row['ks_D']:>9.4f}"
            f" {row['ks_p']:>11.3e} {row['bias1']:>10.5f} {row['wall_time']:>8.2f}"
        )


if __name__ == "__main__":
    main()
