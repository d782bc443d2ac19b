#!/usr/bin/env python3
"""Adaptive-threshold neuron spike trains, exactly sampled.

Runs the spike-train simulation for one or more input currents and prints
mean spike counts and the ISI coefficient of variation; writes spikes.csv
and summary.json per current.
"""

from __future__ import annotations

import argparse

from fptsim.cli import resolve_config, run_experiment


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--trials", type=int, default=5)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--out", default="out/neuron")
    ap.add_argument("--workers", type=int, default=1)
    ap.add_argument("--horizon", type=float, default=2.0)
    ap.add_argument(
        "--currents",
        type=float,
        nargs="+",
        default=[20.0],
        help="input currents to simulate (one output directory per value)",
    )
    args = ap.parse_args()

    for current in args.currents:
        cfg = resolve_config(
            {
                "experiment": "neuron",
                "trials": args.trials,
                "seed": args.seed,
                "out": f"{args.out}/I={current:g}",
                "workers": args.workers,
                "horizon": args.horizon,
                "current": current,
            }
        )
        payload = run_experiment(cfg)
        trains = payload["trains"]
        print(
            f"I={current:g}: trials={trains['n_trials']}"
            f"  mean count={trains['mean_count']:.2f}"
            f"  CV(ISI)={trains['cv_isi']:.3f}"
            f"  counts={payload['counts']}"
        )


if __name__ == "__main__":
    main()
