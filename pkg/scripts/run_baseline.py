#!/usr/bin/env python3
"""Run the baseline experiment and write draws.csv / objectives.csv /
summary.json, printing the headline stability frequency."""

import argparse
import json
from pathlib import Path

from delegation_lab import baseline_config, run_experiment, write_results


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="results/baseline", help="output directory")
    parser.add_argument("--draws", type=int, default=500)
    parser.add_argument("--n", type=int, default=1000)
    parser.add_argument("--m", type=int, default=100)
    parser.add_argument("--seed", type=int, default=None)
    parser.add_argument("--threads", type=int, default=None)
    args = parser.parse_args()

    overrides = {"draws": args.draws, "n": args.n, "m": args.m}
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    config = baseline_config(**overrides)

    result = run_experiment(config, threads=args.threads)
    paths = write_results(result, Path(args.out))
    print(json.dumps(result.summary(), indent=2))
    for path in paths:
        print(path)


if __name__ == "__main__":
    main()
