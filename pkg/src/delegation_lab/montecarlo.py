"""Type sampling and the Monte-Carlo experiment harness.

Populations are drawn from counter-based random streams keyed by
(master_seed, draw_index, stream), so results are bitwise reproducible no
matter how draws are ordered or parallelized, and sweeps reuse the same
per-draw randomness so that curves differ only through the swept parameter.
"""

from __future__ import annotations

import dataclasses
import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np

from .allocation import greedy_delegation, reference_pledges
from .equilibrium import StabilityVerdict, summary_from_arrays
from .model import PlayerType, PublicPoolProfile, RewardScheme, ValidationError
from .objectives import HOT_EXACT_LIMIT, decentralization, expenditure_from_pools

__all__ = [
    "TypeDistribution",
    "SweepSpec",
    "ExperimentConfig",
    "ConfigError",
    "DrawResult",
    "ExperimentResult",
    "sample_pareto",
    "sample_population",
    "run_draw",
    "run_experiment",
    "run_sweep",
    "apply_sweep_value",
    "G_FUNCTIONS",
    "baseline_config",
    "write_results",
    "resolve_threads",
    "THREADS_ENV_VAR",
]

THREADS_ENV_VAR = "DELEGATION_LAB_THREADS"

# Named reward-component shapes used across the experiment sweeps; values are
# polynomial coefficients, constant term first.
G_FUNCTIONS: dict[str, tuple[float, ...]] = {
    "g1": (0.0, 0.5),
    "g2": (0.0, 1.0),
    "g3": (0.0, 2.0),
    "g4": (0.0, 1.0, 0.005),
    "g5": (0.0, 1.0, 0.01),
    "g6": (0.0, 1.0, 0.05),
}

SWEEPABLE_PARAMS = (
    "theta",
    "gamma",
    "pareto_h",
    "epsilon",
    "tau",
    "cost_bounds",
    "a",
    "b",
    "ab",
)


class ConfigError(ValueError):
    """An experiment configuration is malformed; the message names the field."""


@dataclass(frozen=True)
class TypeDistribution:
    """Product prior over one agent's (stake, cost, idle utility).

    Stake follows a bounded Pareto law normalized so the minimum stake is 1;
    cost and idle utility are uniform on their intervals.
    """

    pareto_h: float
    gamma: float
    cost_min: float
    cost_max: float
    eps_min: float
    eps_max: float
    pareto_l: float = 1.0

    def __post_init__(self) -> None:
        if self.pareto_l != 1.0:
            raise ConfigError("pareto_l is normalized to 1")
        if not self.pareto_h > self.pareto_l:
            raise ConfigError(f"pareto_h must exceed 1, got {self.pareto_h!r}")
        if not self.gamma > 0:
            raise ConfigError(f"gamma must be positive, got {self.gamma!r}")
        if not 0 <= self.cost_min <= self.cost_max:
            raise ConfigError("need 0 <= cost_min <= cost_max")
        if not 0 < self.eps_min <= self.eps_max:
            raise ConfigError("need 0 < eps_min <= eps_max")


@dataclass(frozen=True)
class SweepSpec:
    param: str
    values: tuple[Any, ...]

    def __post_init__(self) -> None:
        if self.param not in SWEEPABLE_PARAMS:
            raise ConfigError(
                f"sweep.param must be one of {SWEEPABLE_PARAMS}, got {self.param!r}"
            )
        if not self.values:
            raise ConfigError("sweep.values cannot be empty")
        object.__setattr__(self, "values", tuple(self.values))


@dataclass(frozen=True)
class ExperimentConfig:
    scheme: RewardScheme
    dist: TypeDistribution
    n: int
    draws: int
    theta: float
    m: int
    ell: float
    eps_approx: float
    master_seed: int
    sweep: SweepSpec | None = None

    def __post_init__(self) -> None:
        if self.n < 1:
            raise ConfigError(f"n must be >= 1, got {self.n!r}")
        if self.draws < 1:
            raise ConfigError(f"draws must be >= 1, got {self.draws!r}")
        if self.m < 1:
            raise ConfigError(f"m must be >= 1, got {self.m!r}")
        if not 0 <= self.ell <= 1:
            raise ConfigError(f"ell must lie in [0, 1], got {self.ell!r}")
        if not self.eps_approx > 0:
            raise ConfigError(f"eps_approx must be positive, got {self.eps_approx!r}")
        if not 0 <= int(self.master_seed) < 2**64:
            raise ConfigError("master_seed must be a 64-bit unsigned integer")

    def to_dict(self) -> dict[str, Any]:
        d: dict[str, Any] = {
            "scheme": {
                "a_coeffs": list(self.scheme.a_coeffs),
                "b_coeffs": list(self.scheme.b_coeffs),
                "cap": self.scheme.cap,
                "c_min": self.scheme.c_min,
                "c_max": self.scheme.c_max,
            },
            "dist": {
                "pareto_l": self.dist.pareto_l,
                "pareto_h": self.dist.pareto_h,
                "gamma": self.dist.gamma,
                "cost_min": self.dist.cost_min,
                "cost_max": self.dist.cost_max,
                "eps_min": self.dist.eps_min,
                "eps_max": self.dist.eps_max,
            },
            "n": self.n,
            "draws": self.draws,
            "theta": self.theta,
            "m": self.m,
            "ell": self.ell,
            "eps_approx": self.eps_approx,
            "master_seed": self.master_seed,
        }
        if self.sweep is not None:
            d["sweep"] = {"param": self.sweep.param, "values": list(self.sweep.values)}
        return d

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> "ExperimentConfig":
        def require(mapping: dict[str, Any], key: str, where: str = "") -> Any:
            if key not in mapping:
                raise ConfigError(f"missing config field: {where}{key}")
            return mapping[key]

        scheme_d = require(data, "scheme")
        dist_d = require(data, "dist")
        try:
            scheme = RewardScheme(
                a_coeffs=tuple(require(scheme_d, "a_coeffs", "scheme.")),
                b_coeffs=tuple(require(scheme_d, "b_coeffs", "scheme.")),
                cap=float(require(scheme_d, "cap", "scheme.")),
                c_min=float(require(scheme_d, "c_min", "scheme.")),
                c_max=float(require(scheme_d, "c_max", "scheme.")),
            )
        except ValidationError as exc:
            raise ConfigError(f"scheme: {exc}") from exc
        dist = TypeDistribution(
            pareto_l=float(dist_d.get("pareto_l", 1.0)),
            pareto_h=float(require(dist_d, "pareto_h", "dist.")),
            gamma=float(require(dist_d, "gamma", "dist.")),
            cost_min=float(require(dist_d, "cost_min", "dist.")),
            cost_max=float(require(dist_d, "cost_max", "dist.")),
            eps_min=float(require(dist_d, "eps_min", "dist.")),
            eps_max=float(require(dist_d, "eps_max", "dist.")),
        )
        sweep = None
        if data.get("sweep") is not None:
            sweep_d = data["sweep"]
            sweep = SweepSpec(
                param=str(require(sweep_d, "param", "sweep.")),
                values=tuple(require(sweep_d, "values", "sweep.")),
            )
        return cls(
            scheme=scheme,
            dist=dist,
            n=int(require(data, "n")),
            draws=int(require(data, "draws")),
            theta=float(require(data, "theta")),
            m=int(require(data, "m")),
            ell=float(require(data, "ell")),
            eps_approx=float(require(data, "eps_approx")),
            master_seed=int(require(data, "master_seed")),
            sweep=sweep,
        )


@dataclass(frozen=True)
class DrawResult:
    """Outcome of one population draw: stability plus participation breakdown,
    and per-reference (reference_pledge, decentralization, expenditure) when
    the draw is stable."""

    draw_index: int
    stable: bool
    verdict: str
    idle_stake: float
    delegated_stake: float
    pledged_stake: float
    idle_count: int
    delegator_count: int
    spo_count: int
    per_reference: tuple[tuple[float, float, float], ...]

    @property
    def participation(self) -> float:
        return self.delegated_stake + self.pledged_stake


@dataclass(frozen=True)
class ExperimentResult:
    config: ExperimentConfig
    draws: tuple[DrawResult, ...]

    @property
    def stability_frequency(self) -> float:
        return sum(1 for d in self.draws if d.stable) / len(self.draws)

    def summary(self) -> dict[str, Any]:
        n_draws = len(self.draws)
        stable = sum(1 for d in self.draws if d.stable)
        return {
            "draws": n_draws,
            "stable_draws": stable,
            "stability_frequency": stable / n_draws,
            "mean_idle_stake": _mean(d.idle_stake for d in self.draws),
            "mean_delegated_stake": _mean(d.delegated_stake for d in self.draws),
            "mean_pledged_stake": _mean(d.pledged_stake for d in self.draws),
            "mean_idle_n": _mean(d.idle_count for d in self.draws),
            "mean_delegator_n": _mean(d.delegator_count for d in self.draws),
            "mean_spo_n": _mean(d.spo_count for d in self.draws),
        }


def _mean(values) -> float:
    values = list(values)
    return math.fsum(values) / len(values)


# ---------------------------------------------------------------------------
# Sampling
# ---------------------------------------------------------------------------

_STREAM_STAKE, _STREAM_COST, _STREAM_EPS = 0, 1, 2


def _uniform_stream(master_seed: int, draw_index: int, stream: int, n: int) -> np.ndarray:
    key = np.array([master_seed, draw_index * 4 + stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key)).random(n)


def sample_pareto(dist: TypeDistribution, u):
    """Bounded-Pareto stake via the inverse CDF; u may be a scalar or array."""
    u_arr = np.asarray(u, dtype=np.float64)
    if np.any((u_arr < 0) | (u_arr >= 1)):
        raise ValueError("u must lie in [0, 1)")
    ratio = (dist.pareto_l / dist.pareto_h) ** dist.gamma
    x = dist.pareto_l * (1.0 - u_arr * (1.0 - ratio)) ** (-1.0 / dist.gamma)
    return float(x) if np.isscalar(u) or np.ndim(u) == 0 else x


def _sample_arrays(
    config: ExperimentConfig, draw_index: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    dist = config.dist
    n = config.n
    seed = config.master_seed
    stakes = sample_pareto(dist, _uniform_stream(seed, draw_index, _STREAM_STAKE, n))
    u_cost = _uniform_stream(seed, draw_index, _STREAM_COST, n)
    costs = dist.cost_min + u_cost * (dist.cost_max - dist.cost_min)
    u_eps = _uniform_stream(seed, draw_index, _STREAM_EPS, n)
    idle = dist.eps_min + u_eps * (dist.eps_max - dist.eps_min)
    return stakes, costs, idle


def sample_population(
    config: ExperimentConfig, draw_index: int
) -> tuple[PlayerType, ...]:
    """Draw the n agent types for one Monte-Carlo draw, reproducibly."""
    stakes, costs, idle = _sample_arrays(config, draw_index)
    return tuple(
        PlayerType(stake=float(s), cost=float(c), idle_utility=float(e))
        for s, c, e in zip(stakes, costs, idle)
    )


# ---------------------------------------------------------------------------
# Draws and experiments
# ---------------------------------------------------------------------------


def run_draw(config: ExperimentConfig, draw_index: int) -> DrawResult:
    """Sample one population, certify stability, and evaluate the objective
    spread over the reference-pledge grid when the draw is stable.

    Objectives are computed from the pool-level greedy allocation; every
    concrete delegation map consistent with it yields the same values.
    """
    stakes, costs, idle_utils = _sample_arrays(config, draw_index)
    summary = summary_from_arrays(
        stakes, costs, idle_utils, config.theta, config.scheme
    )

    n = config.n
    if summary.verdict is StabilityVerdict.STABLE_DEGENERATE:
        return DrawResult(
            draw_index=draw_index,
            stable=False,
            verdict=summary.verdict.value,
            idle_stake=float(stakes.sum()),
            delegated_stake=0.0,
            pledged_stake=0.0,
            idle_count=n,
            delegator_count=0,
            spo_count=0,
            per_reference=(),
        )

    spo_mask = stakes >= config.theta
    delegating = ~spo_mask & (summary.rate * stakes >= idle_utils)
    idle_mask = ~spo_mask & ~delegating
    pledged = float(stakes[spo_mask].sum())
    delegated = float(stakes[delegating].sum())

    per_reference: list[tuple[float, float, float]] = []
    if summary.stable:
        pledges = [float(stakes[j]) for j in summary.spo_indices]
        deficits = [b.deficit for b in summary.per_pool_bounds]
        capacities = [
            min(b.capacity, summary.delegation) for b in summary.per_pool_bounds
        ]
        grid = reference_pledges(min(pledges), max(pledges), config.m)
        for ref in grid.values:
            beta = greedy_delegation(
                ref, deficits, capacities, pledges, summary.delegation
            )
            pools = PublicPoolProfile(pledges=tuple(pledges), external=tuple(beta))
            spent = expenditure_from_pools(pools, config.scheme)
            decent, _ = decentralization(
                pools, config.ell, config.eps_approx, exact_limit=HOT_EXACT_LIMIT
            )
            per_reference.append((ref, decent, spent))

    return DrawResult(
        draw_index=draw_index,
        stable=summary.stable,
        verdict=summary.verdict.value,
        idle_stake=float(stakes[idle_mask].sum()),
        delegated_stake=delegated,
        pledged_stake=pledged,
        idle_count=int(idle_mask.sum()),
        delegator_count=int(delegating.sum()),
        spo_count=int(spo_mask.sum()),
        per_reference=tuple(per_reference),
    )


def _draw_task(args: tuple[ExperimentConfig, int]) -> DrawResult:
    return run_draw(*args)


def resolve_threads(threads: int | None = None) -> int:
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get(THREADS_ENV_VAR)
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def run_experiment(
    config: ExperimentConfig, threads: int | None = None
) -> ExperimentResult:
    """Run all draws for a single parameter setting.

    Draws are independent; results are merged in draw order, so output is
    identical for any worker count.
    """
    threads = resolve_threads(threads)
    tasks = [(config, i) for i in range(config.draws)]
    if threads <= 1 or config.draws == 1:
        draws = [run_draw(config, i) for i in range(config.draws)]
    else:
        chunk = max(1, config.draws // (threads * 4))
        with ProcessPoolExecutor(max_workers=threads) as pool:
            draws = list(pool.map(_draw_task, tasks, chunksize=chunk))
    return ExperimentResult(config=config, draws=tuple(draws))


def apply_sweep_value(
    config: ExperimentConfig, param: str, value: Any
) -> ExperimentConfig:
    """One sweep point: the base config with a single parameter replaced.

    The master seed is kept, so sweep curves share per-draw randomness.
    """
    base = dataclasses.replace(config, sweep=None)
    if param == "theta":
        return dataclasses.replace(base, theta=float(value))
    if param == "gamma":
        return dataclasses.replace(
            base, dist=dataclasses.replace(base.dist, gamma=float(value))
        )
    if param == "pareto_h":
        return dataclasses.replace(
            base, dist=dataclasses.replace(base.dist, pareto_h=float(value))
        )
    if param == "epsilon":
        v = float(value)
        return dataclasses.replace(
            base, dist=dataclasses.replace(base.dist, eps_min=v, eps_max=v)
        )
    if param == "tau":
        return dataclasses.replace(
            base, scheme=dataclasses.replace(base.scheme, cap=float(value))
        )
    if param == "cost_bounds":
        lo, hi = (float(value[0]), float(value[1]))
        return dataclasses.replace(
            base,
            scheme=dataclasses.replace(base.scheme, c_min=lo, c_max=hi),
            dist=dataclasses.replace(base.dist, cost_min=lo, cost_max=hi),
        )
    if param in ("a", "b", "ab"):
        coeffs = _resolve_coeffs(value)
        scheme = base.scheme
        if param in ("a", "ab"):
            scheme = dataclasses.replace(scheme, a_coeffs=coeffs)
        if param in ("b", "ab"):
            scheme = dataclasses.replace(scheme, b_coeffs=coeffs)
        return dataclasses.replace(base, scheme=scheme)
    raise ConfigError(f"unknown sweep parameter {param!r}")


def _resolve_coeffs(value: Any) -> tuple[float, ...]:
    if isinstance(value, str):
        if value not in G_FUNCTIONS:
            raise ConfigError(
                f"unknown reward shape {value!r}; presets are {sorted(G_FUNCTIONS)}"
            )
        return G_FUNCTIONS[value]
    return tuple(float(z) for z in value)


def run_sweep(
    config: ExperimentConfig, threads: int | None = None
) -> list[tuple[Any, ExperimentResult]]:
    """Run the configured sweep, one experiment per value, sharing seeds."""
    if config.sweep is None:
        raise ConfigError("config has no sweep section")
    out = []
    for value in config.sweep.values:
        point = apply_sweep_value(config, config.sweep.param, value)
        out.append((value, run_experiment(point, threads=threads)))
    return out


def baseline_config(**overrides: Any) -> ExperimentConfig:
    """The default experiment setting; individual fields can be overridden."""
    base = ExperimentConfig(
        scheme=RewardScheme(
            a_coeffs=G_FUNCTIONS["g2"],
            b_coeffs=G_FUNCTIONS["g2"],
            cap=200.0,
            c_min=0.4,
            c_max=0.6,
        ),
        dist=TypeDistribution(
            pareto_h=100.0,
            gamma=1.5,
            cost_min=0.4,
            cost_max=0.6,
            eps_min=0.01,
            eps_max=0.01,
        ),
        n=1000,
        draws=500,
        theta=30.0,
        m=100,
        ell=0.5,
        eps_approx=0.01,
        master_seed=20240913,
    )
    return dataclasses.replace(base, **overrides) if overrides else base


# ---------------------------------------------------------------------------
# Result files
# ---------------------------------------------------------------------------


def _fmt(x: float) -> str:
    return f"{x:.9g}"


def _round9(x: float) -> float:
    return float(_fmt(x))


def write_results(result: ExperimentResult, out_dir: str | Path) -> list[Path]:
    """Write draws.csv, objectives.csv and summary.json into out_dir."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    draws_path = out / "draws.csv"
    with open(draws_path, "w", newline="") as fh:
        fh.write(
            "draw,stable,idle_stake,delegated_stake,pledged_stake,"
            "idle_n,delegator_n,spo_n\n"
        )
        for d in result.draws:
            fh.write(
                f"{d.draw_index},{int(d.stable)},{_fmt(d.idle_stake)},"
                f"{_fmt(d.delegated_stake)},{_fmt(d.pledged_stake)},"
                f"{d.idle_count},{d.delegator_count},{d.spo_count}\n"
            )

    objectives_path = out / "objectives.csv"
    with open(objectives_path, "w", newline="") as fh:
        fh.write(
            "draw,ref_index,ref_pledge,participation,decentralization,expenditure\n"
        )
        for d in result.draws:
            for ref_index, (ref, decent, spent) in enumerate(d.per_reference):
                fh.write(
                    f"{d.draw_index},{ref_index},{_fmt(ref)},"
                    f"{_fmt(d.participation)},{_fmt(decent)},{_fmt(spent)}\n"
                )

    summary_path = out / "summary.json"
    summary = result.summary()
    payload = {
        "config": result.config.to_dict(),
        **{
            key: (_round9(val) if isinstance(val, float) else val)
            for key, val in summary.items()
        },
    }
    with open(summary_path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    return [draws_path, objectives_path, summary_path]
