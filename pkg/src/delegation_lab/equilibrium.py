"""Threshold strategies, ex-post stability certification, and the sufficiency
checker for pure Nash equilibria, with a brute-force deviation oracle used as
an independent test witness.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import Action, PlayerType, RewardScheme, Role, StrategyProfile
from .rewards import (
    PoolBounds,
    agent_utility,
    alpha,
    max_delegate_context,
    pool_bounds,
    pool_reward,
)

__all__ = [
    "ThresholdStrategy",
    "StabilityVerdict",
    "StabilitySummary",
    "apply_strategy",
    "stability_summary",
    "PneViolation",
    "PneVerdict",
    "check_pne_sufficient",
    "deviation_oracle",
]

# Conditions reported by check_pne_sufficient.
COND_FEASIBLE_TARGET = "feasible_target"
COND_PARTICIPATION = "participation"
COND_IDLE_BEST = "idle_best_response"
COND_DEFICIT = "deficit"
COND_CAPACITY = "capacity"


@dataclass(frozen=True)
class ThresholdStrategy:
    """Agents become SPOs exactly when their stake reaches the threshold."""

    theta: float

    def __post_init__(self) -> None:
        if self.theta < 0:
            raise ValueError(f"theta must be non-negative, got {self.theta!r}")

    def is_spo(self, ptype: PlayerType) -> bool:
        return ptype.stake >= self.theta


class StabilityVerdict(enum.Enum):
    STABLE = "stable"
    UNSTABLE = "unstable"
    # No agent clears the threshold: no pools can form, the inequality chain
    # is vacuous, and only the all-idle profile remains. Tagged separately and
    # never counted as stable.
    STABLE_DEGENERATE = "stable_degenerate"


@dataclass(frozen=True)
class StabilitySummary:
    """Aggregates certifying whether a threshold strategy admits an ex-post PNE.

    ``stable`` holds exactly when 0 < deficit <= delegation <= capacity; the
    degenerate no-operator case carries its own verdict tag instead of being
    folded into that chain.
    """

    delegation: float
    deficit: float
    capacity: float
    pivotal_stake: float
    rate: float
    stable: bool
    verdict: StabilityVerdict
    spo_indices: tuple[int, ...]
    per_pool_bounds: tuple[PoolBounds, ...]


def apply_strategy(
    strategy: ThresholdStrategy, types: Sequence[PlayerType]
) -> tuple[int, ...]:
    """Indices of the agents the strategy sends into pool operation."""
    return tuple(i for i, t in enumerate(types) if strategy.is_spo(t))


def _poly_eval_vec(coeffs: Sequence[float], x: np.ndarray) -> np.ndarray:
    acc = np.zeros_like(x)
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


def summary_from_arrays(
    stakes: np.ndarray,
    costs: np.ndarray,
    idle_utils: np.ndarray,
    theta: float,
    scheme: RewardScheme,
) -> StabilitySummary:
    """Array-level core of :func:`stability_summary`."""
    spo_mask = stakes >= theta
    spo_idx = tuple(int(i) for i in np.flatnonzero(spo_mask))

    if not spo_idx:
        return StabilitySummary(
            delegation=0.0,
            deficit=0.0,
            capacity=0.0,
            pivotal_stake=0.0,
            rate=0.0,
            stable=False,
            verdict=StabilityVerdict.STABLE_DEGENERATE,
            spo_indices=(),
            per_pool_bounds=(),
        )

    non_spo = ~spo_mask
    capped = np.minimum(scheme.cap, stakes)
    alpha_cmin = (_poly_eval_vec(scheme.a_coeffs, capped) - scheme.c_min) / stakes
    eligible = non_spo & (alpha_cmin >= idle_utils / stakes)

    if eligible.any():
        pivotal = float(stakes[eligible].max())
        rate = alpha(scheme, pivotal, scheme.c_min)
    else:
        pivotal = 0.0
        rate = 0.0

    delegating = non_spo & (rate * stakes >= idle_utils)
    delegation = float(stakes[delegating].sum())

    bounds = tuple(
        pool_bounds(
            scheme,
            pledge=float(stakes[j]),
            cost=float(costs[j]),
            idle_utility=float(idle_utils[j]),
            rate=rate,
        )
        for j in spo_idx
    )
    deficit = math.fsum(b.deficit for b in bounds) if all(
        math.isfinite(b.deficit) for b in bounds
    ) else math.inf
    capacity = math.fsum(b.capacity for b in bounds) if all(
        b.capacity > -math.inf for b in bounds
    ) else -math.inf
    if any(math.isinf(b.capacity) for b in bounds) and capacity > -math.inf:
        capacity = math.inf

    stable = 0.0 < deficit <= delegation <= capacity
    return StabilitySummary(
        delegation=delegation,
        deficit=deficit,
        capacity=capacity,
        pivotal_stake=pivotal,
        rate=rate,
        stable=stable,
        verdict=StabilityVerdict.STABLE if stable else StabilityVerdict.UNSTABLE,
        spo_indices=spo_idx,
        per_pool_bounds=bounds,
    )


def stability_summary(
    strategy: ThresholdStrategy,
    types: Sequence[PlayerType],
    scheme: RewardScheme,
) -> StabilitySummary:
    """Certify the threshold strategy for one concrete draw of types."""
    stakes = np.array([t.stake for t in types], dtype=np.float64)
    costs = np.array([t.cost for t in types], dtype=np.float64)
    idle = np.array([t.idle_utility for t in types], dtype=np.float64)
    return summary_from_arrays(stakes, costs, idle, strategy.theta, scheme)


@dataclass(frozen=True)
class PneViolation:
    agent: int
    condition: str
    slack: float


@dataclass(frozen=True)
class PneVerdict:
    sufficient: bool
    violations: tuple[PneViolation, ...]

    def to_json(self) -> str:
        return json.dumps(
            {
                "sufficient": self.sufficient,
                "violations": [
                    {"agent": v.agent, "condition": v.condition, "slack": v.slack}
                    for v in self.violations
                ],
            },
            indent=2,
        )


def _violated(lhs: float, rhs: float, rel_tol: float) -> bool:
    # lhs >= rhs required; float re-summation noise must not flag a violation.
    scale = max(1.0, abs(lhs), abs(rhs))
    return lhs < rhs - rel_tol * scale


def check_pne_sufficient(
    profile: StrategyProfile,
    scheme: RewardScheme,
    rel_tol: float = 1e-9,
) -> PneVerdict:
    """Check the sufficient conditions for the profile to be a pure Nash
    equilibrium.

    Returns a verdict rather than raising: ``sufficient`` is True only when
    every condition holds, otherwise each failed condition is listed with the
    agent concerned and the (negative) slack by which it fails. ``rel_tol``
    absorbs float noise from re-summing delegation maps; the reward formulas
    themselves are evaluated exactly.
    """
    context = max_delegate_context(profile, scheme)
    rate = context.rate
    externals = profile.external_by_pool()
    rho: dict[int, float] = {}
    feasible: dict[int, bool] = {}
    for j, beta in externals.items():
        lam = profile.types[j].stake
        rho[j] = pool_reward(scheme, lam, beta)
        feasible[j] = rho[j] >= (lam + beta) * rate

    def utility(i: int) -> float:
        action = profile.actions[i]
        ptype = profile.types[i]
        if action.role is Role.SPO:
            lam, beta = ptype.stake, externals[i]
            reward = (
                rho[i] - rate * beta if feasible[i] else lam / (lam + beta) * rho[i]
            )
            return reward - ptype.cost
        total = 0.0
        for j, amount in action.delegations.items():
            if j not in rho:
                continue
            if feasible[j]:
                total += rate * amount
            else:
                lam_j = profile.types[j].stake
                total += amount / (lam_j + externals[j]) * rho[j]
        return total

    violations: list[PneViolation] = []
    any_active_pool = bool(externals)

    for i, action in enumerate(profile.actions):
        ptype = profile.types[i]
        if action.role is Role.DELEGATE:
            for j, amount in action.delegations.items():
                if amount <= 0:
                    continue
                if j not in feasible or not feasible[j]:
                    violations.append(
                        PneViolation(agent=i, condition=COND_FEASIBLE_TARGET, slack=-amount)
                    )
                    break
        if action.role is not Role.IDLE:
            earned = utility(i)
            if _violated(earned, ptype.idle_utility, rel_tol):
                violations.append(
                    PneViolation(
                        agent=i,
                        condition=COND_PARTICIPATION,
                        slack=earned - ptype.idle_utility,
                    )
                )
        else:
            # Best delegation the idle agent could unlock (they may become
            # pivotal), plus the solo pool they can always open; with pools
            # present and public cost bounds the former dominates, but with no
            # pools only the solo deviation remains available.
            solo = pool_reward(scheme, ptype.stake, 0.0) - ptype.cost
            best = solo
            if any_active_pool:
                best_rate = alpha(
                    scheme, max(ptype.stake, context.pivotal_stake), scheme.c_min
                )
                best = max(best, best_rate * ptype.stake)
            if _violated(ptype.idle_utility, best, rel_tol):
                violations.append(
                    PneViolation(
                        agent=i,
                        condition=COND_IDLE_BEST,
                        slack=ptype.idle_utility - best,
                    )
                )
        if action.role is Role.SPO and ptype.stake < scheme.cap:
            bounds = pool_bounds(
                scheme,
                pledge=ptype.stake,
                cost=ptype.cost,
                idle_utility=ptype.idle_utility,
                rate=rate,
            )
            beta = externals[i]
            if _violated(beta, bounds.deficit, rel_tol):
                violations.append(
                    PneViolation(
                        agent=i, condition=COND_DEFICIT, slack=beta - bounds.deficit
                    )
                )
            if _violated(bounds.capacity, beta, rel_tol):
                violations.append(
                    PneViolation(
                        agent=i, condition=COND_CAPACITY, slack=bounds.capacity - beta
                    )
                )

    return PneVerdict(sufficient=not violations, violations=tuple(violations))


def deviation_oracle(
    profile: StrategyProfile, scheme: RewardScheme, agent: int
) -> float:
    """Best utility the agent can reach by a structured unilateral deviation.

    Candidate deviations are: going idle, opening a pool, and delegating the
    whole stake to any single pool that would be active afterwards. Each one
    is evaluated by rebuilding the profile and re-deriving the delegation
    rate, so the oracle shares no algebra with the gap or bound formulas.
    """
    if not 0 <= agent < profile.n:
        raise IndexError(f"agent index {agent} out of range")

    ptype = profile.types[agent]
    current = profile.actions[agent].role
    actions = list(profile.actions)

    def evaluate(candidate: Action) -> float:
        actions[agent] = candidate
        deviated = StrategyProfile(actions=tuple(actions), types=profile.types)
        actions[agent] = profile.actions[agent]
        return agent_utility(deviated, scheme, agent)

    best = -math.inf
    if current is not Role.IDLE:
        best = max(best, evaluate(Action.idle()))
    if current is Role.SPO:
        # A sitting operator cannot refuse delegation by re-choosing the same
        # action, so the solo-pool alternative is priced directly.
        best = max(best, pool_reward(scheme, ptype.stake, 0.0) - ptype.cost)
    else:
        best = max(best, evaluate(Action.spo()))
    for j, other in enumerate(profile.actions):
        if j != agent and other.role is Role.SPO:
            best = max(best, evaluate(Action.delegate({j: ptype.stake})))
    return best
