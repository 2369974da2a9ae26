#!/usr/bin/env python3
"""Reproduce the full set of parameter sweeps: idle utility, reward shapes
(pledge side, delegation side, both), pool cap, operator threshold, stake
inequality, and operating-cost bounds.

Each sweep writes one subdirectory per value plus a sweep-level summary.json
with the stability frequencies. High idle utility (epsilon = 5) is used for
the reward-shape and cap sweeps so participation differences stay visible.
"""

import argparse
import dataclasses
import json
from pathlib import Path

from delegation_lab import SweepSpec, baseline_config, run_sweep, write_results
from delegation_lab.montecarlo import apply_sweep_value

G_NAMES = ("g1", "g2", "g3", "g4", "g5", "g6")

SWEEPS = {
    "epsilon": dict(param="epsilon", values=(0.005, 0.1, 1.0, 5.0, 10.0)),
    "a": dict(param="a", values=G_NAMES, epsilon=5.0),
    "b": dict(param="b", values=G_NAMES, epsilon=5.0),
    "ab": dict(param="ab", values=G_NAMES, epsilon=5.0),
    "tau": dict(param="tau", values=(100.0, 150.0, 200.0, 250.0), epsilon=5.0),
    "theta": dict(param="theta", values=(10.0, 20.0, 30.0, 40.0, 50.0, 60.0)),
    "gamma": dict(param="gamma", values=(1.4, 1.45, 1.5, 1.55, 1.6)),
    "cost_width": dict(
        param="cost_bounds", values=((0.45, 0.55), (0.4, 0.6), (0.2, 0.8))
    ),
    "cost_mean": dict(
        param="cost_bounds",
        values=((0.35, 0.45), (0.45, 0.55), (0.55, 0.65), (1.95, 2.05), (4.95, 5.05)),
    ),
}


def label(value) -> str:
    if isinstance(value, tuple):
        return "-".join(f"{v:g}" for v in value)
    return f"{value:g}" if isinstance(value, float) else str(value)


def build_config(name: str, draws: int, n: int, m: int):
    settings = dict(SWEEPS[name])
    param = settings["param"]
    values = settings["values"]
    config = baseline_config(draws=draws, n=n, m=m)
    if "epsilon" in settings:
        config = apply_sweep_value(config, "epsilon", settings["epsilon"])
    return dataclasses.replace(
        config, sweep=SweepSpec(param=param, values=tuple(values))
    )


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/sweeps")
    parser.add_argument("--draws", type=int, default=500)
    parser.add_argument("--n", type=int, default=1000)
    parser.add_argument("--m", type=int, default=100)
    parser.add_argument("--threads", type=int, default=None)
    parser.add_argument(
        "--only", nargs="*", choices=sorted(SWEEPS), help="subset of sweeps to run"
    )
    args = parser.parse_args()

    for name in args.only or sorted(SWEEPS):
        config = build_config(name, args.draws, args.n, args.m)
        param = config.sweep.param
        out_dir = Path(args.out) / name
        frequencies = {}
        for value, result in run_sweep(config, threads=args.threads):
            write_results(result, out_dir / f"{param}={label(value)}")
            frequencies[label(value)] = result.stability_frequency
        (out_dir / "summary.json").write_text(
            json.dumps({"sweep": param, "stability_frequency": frequencies}, indent=2)
            + "\n"
        )
        print(f"{name}: {frequencies}")


if __name__ == "__main__":
    main()
