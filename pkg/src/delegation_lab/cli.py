"""Command-line surface: run experiments, check profiles for equilibrium
sufficiency, evaluate objectives, and print the shipped presets.

Exit codes are stable per error class: 0 success, 1 failed check verdict,
2 invalid configuration or input, 3 I/O failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from pathlib import Path

from .equilibrium import check_pne_sufficient
from .model import RewardScheme, ValidationError, load_profile_csv
from .montecarlo import (
    ConfigError,
    ExperimentConfig,
    G_FUNCTIONS,
    THREADS_ENV_VAR,
    baseline_config,
    run_experiment,
    run_sweep,
    write_results,
)
from .objectives import evaluate_objectives

EXIT_OK = 0
EXIT_CHECK_FAILED = 1
EXIT_BAD_INPUT = 2
EXIT_IO = 3

# Scalar config keys that may be overridden from the command line. Flags win
# over file values; ties at stake thresholds always favor pool operation.
_OVERRIDE_KEYS = ("n", "draws", "theta", "m", "ell", "eps_approx", "master_seed")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="delegation-lab",
        description="Stake-delegation game simulator and analysis toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run a Monte-Carlo experiment")
    run_p.add_argument("--config", required=True, help="JSON experiment config")
    run_p.add_argument("--out", required=True, help="output directory")
    run_p.add_argument(
        "--threads",
        type=int,
        default=None,
        help=f"worker count (default: {THREADS_ENV_VAR} or all cores)",
    )
    run_p.add_argument("--n", type=int)
    run_p.add_argument("--draws", type=int)
    run_p.add_argument("--theta", type=float)
    run_p.add_argument("--m", type=int)
    run_p.add_argument("--ell", type=float)
    run_p.add_argument("--eps-approx", dest="eps_approx", type=float)
    run_p.add_argument("--master-seed", dest="master_seed", type=int)

    check_p = sub.add_parser(
        "check", help="check a profile CSV for equilibrium sufficiency"
    )
    _add_profile_and_scheme_args(check_p)

    obj_p = sub.add_parser("objectives", help="evaluate objectives for a profile CSV")
    _add_profile_and_scheme_args(obj_p)
    obj_p.add_argument("--ell", type=float, default=0.5)
    obj_p.add_argument("--eps-approx", dest="eps_approx", type=float, default=0.01)
    obj_p.add_argument(
        "--include-idle-epsilon",
        action="store_true",
        help="count idle utilities as scheme expenditure",
    )

    sub.add_parser("presets", help="print reward shapes and the baseline config")
    return parser


def _add_profile_and_scheme_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--profile", required=True, help="profile CSV path")
    p.add_argument("--config", help="JSON config supplying the reward scheme")
    p.add_argument("--a-coeffs", dest="a_coeffs", help="comma-separated, constant first")
    p.add_argument("--b-coeffs", dest="b_coeffs", help="comma-separated, constant first")
    p.add_argument("--cap", type=float)
    p.add_argument("--c-min", dest="c_min", type=float)
    p.add_argument("--c-max", dest="c_max", type=float)


def _load_config(path: str, args: argparse.Namespace) -> ExperimentConfig:
    try:
        data = json.loads(Path(path).read_text())
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config is not valid JSON: {exc}") from exc
    config = ExperimentConfig.from_dict(data)
    overrides = {
        key: getattr(args, key)
        for key in _OVERRIDE_KEYS
        if getattr(args, key, None) is not None
    }
    if overrides:
        config = dataclasses.replace(config, **overrides)
    return config


def _scheme_from_args(args: argparse.Namespace) -> RewardScheme:
    if args.config:
        data = json.loads(Path(args.config).read_text())
        if "scheme" not in data:
            raise ConfigError("missing config field: scheme")
        s = data["scheme"]
        return RewardScheme(
            a_coeffs=tuple(s["a_coeffs"]),
            b_coeffs=tuple(s["b_coeffs"]),
            cap=float(s["cap"]),
            c_min=float(s["c_min"]),
            c_max=float(s["c_max"]),
        )
    missing = [
        flag
        for flag, val in (
            ("--a-coeffs", args.a_coeffs),
            ("--b-coeffs", args.b_coeffs),
            ("--cap", args.cap),
            ("--c-min", args.c_min),
            ("--c-max", args.c_max),
        )
        if val is None
    ]
    if missing:
        raise ConfigError(
            "reward scheme incomplete: pass --config or all of "
            + ", ".join(missing)
        )
    return RewardScheme(
        a_coeffs=tuple(float(z) for z in args.a_coeffs.split(",")),
        b_coeffs=tuple(float(z) for z in args.b_coeffs.split(",")),
        cap=args.cap,
        c_min=args.c_min,
        c_max=args.c_max,
    )


def _cmd_run(args: argparse.Namespace) -> int:
    config = _load_config(args.config, args)
    out_dir = Path(args.out)
    written: list[Path] = []
    if config.sweep is None:
        result = run_experiment(config, threads=args.threads)
        written += write_results(result, out_dir)
    else:
        sweep_index = {"sweep": config.sweep.param, "values": [], "stability_frequency": {}}
        for value, result in run_sweep(config, threads=args.threads):
            label = f"{config.sweep.param}={_value_label(value)}"
            written += write_results(result, out_dir / label)
            sweep_index["values"].append(value)
            sweep_index["stability_frequency"][label] = result.stability_frequency
        out_dir.mkdir(parents=True, exist_ok=True)
        index_path = out_dir / "summary.json"
        index_path.write_text(json.dumps(sweep_index, indent=2) + "\n")
        written.append(index_path)
    for path in written:
        print(path)
    return EXIT_OK


def _value_label(value) -> str:
    if isinstance(value, str):
        return value
    if isinstance(value, (list, tuple)):
        return "-".join(_value_label(v) for v in value)
    if isinstance(value, float) and value == int(value):
        return str(int(value))
    return f"{value:g}" if isinstance(value, float) else str(value)


def _cmd_check(args: argparse.Namespace) -> int:
    scheme = _scheme_from_args(args)
    profile = load_profile_csv(args.profile)
    verdict = check_pne_sufficient(profile, scheme)
    print(verdict.to_json())
    return EXIT_OK if verdict.sufficient else EXIT_CHECK_FAILED


def _cmd_objectives(args: argparse.Namespace) -> int:
    scheme = _scheme_from_args(args)
    profile = load_profile_csv(args.profile)
    report = evaluate_objectives(
        profile,
        scheme,
        ell=args.ell,
        eps_approx=args.eps_approx,
        include_idle_epsilon=args.include_idle_epsilon,
    )
    payload = {
        "participation": report.participation,
        "expenditure": report.expenditure,
        "decentralization": report.decentralization,
        "ell": report.ell,
        "method": report.method,
    }
    if report.eps_approx is not None:
        payload["eps_approx"] = report.eps_approx
    print(json.dumps(payload, indent=2))
    return EXIT_OK


def _cmd_presets(_: argparse.Namespace) -> int:
    payload = {
        "g_functions": {name: list(coeffs) for name, coeffs in G_FUNCTIONS.items()},
        "baseline": baseline_config().to_dict(),
    }
    print(json.dumps(payload, indent=2))
    return EXIT_OK


_HANDLERS = {
    "run": _cmd_run,
    "check": _cmd_check,
    "objectives": _cmd_objectives,
    "presets": _cmd_presets,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        return _HANDLERS[args.command](args)
    except (ConfigError, ValidationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
