"""System objectives: participation (total pooled stake), expenditure (total
scheme payout), and decentralization (smallest pledge mass of a pool coalition
controlling a target share of the pooled stake).

Decentralization is a 0/1 min-knapsack; small pool counts are solved by exact
subset enumeration and larger ones by a dynamic-programming FPTAS.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import PublicPoolProfile, RewardScheme, Role, StrategyProfile, reduce_profile
from .rewards import pool_reward

__all__ = [
    "EXACT_POOL_LIMIT",
    "PoolCountError",
    "NoCoalitionError",
    "ObjectiveReport",
    "participation",
    "expenditure",
    "expenditure_from_pools",
    "decentralization_exact",
    "decentralization_fptas",
    "decentralization",
    "evaluate_objectives",
]

EXACT_POOL_LIMIT = 25
# Enumeration is 2^k; in per-draw hot loops the FPTAS wins well before the
# hard limit, so experiment runs switch over earlier.
HOT_EXACT_LIMIT = 15

# Relative slack on coverage comparisons; absorbs float summation noise when a
# coalition must reach a share of a separately-summed total.
COVER_SLACK = 1e-12


class PoolCountError(ValueError):
    """Too many pools for exact enumeration; use the FPTAS instead."""


class NoCoalitionError(ValueError):
    """No pool coalition reaches the target size (only possible for ell > 1)."""


@dataclass(frozen=True)
class ObjectiveReport:
    participation: float
    expenditure: float
    decentralization: float
    ell: float
    method: str
    eps_approx: float | None = None

    def __post_init__(self) -> None:
        if self.method not in ("exact", "fptas"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == "fptas" and self.eps_approx is None:
            raise ValueError("fptas report needs eps_approx")


def participation(pools: PublicPoolProfile) -> float:
    """Total active stake: the sum of all pool sizes."""
    return math.fsum(pools.sizes)


def expenditure_from_pools(pools: PublicPoolProfile, scheme: RewardScheme) -> float:
    return math.fsum(
        pool_reward(scheme, lam, beta)
        for lam, beta in zip(pools.pledges, pools.external)
    )


def expenditure(
    profile: StrategyProfile,
    scheme: RewardScheme,
    include_idle_epsilon: bool = False,
) -> float:
    """Total payout of the reward scheme: the sum of pool rewards.

    Idle utilities are earned outside the scheme and excluded by default;
    ``include_idle_epsilon`` adds them for the strict all-agent reading.
    """
    total = expenditure_from_pools(reduce_profile(profile), scheme)
    if include_idle_epsilon:
        total += math.fsum(
            t.idle_utility
            for a, t in zip(profile.actions, profile.types)
            if a.role is Role.IDLE
        )
    return total


def _coverage_need(pools: PublicPoolProfile, ell: float) -> float:
    threshold = ell * participation(pools)
    return threshold - COVER_SLACK * abs(threshold)


def decentralization_exact(pools: PublicPoolProfile, ell: float) -> float:
    """Minimum pledge mass over all qualifying coalitions, by enumeration."""
    if pools.k == 0:
        return 0.0
    if pools.k > EXACT_POOL_LIMIT:
        raise PoolCountError(
            f"{pools.k} pools exceed the enumeration limit of {EXACT_POOL_LIMIT}; "
            "use decentralization_fptas"
        )
    need = _coverage_need(pools, ell)
    subset_sizes = np.zeros(1)
    subset_pledges = np.zeros(1)
    for size, pledge in zip(pools.sizes, pools.pledges):
        subset_sizes = np.concatenate([subset_sizes, subset_sizes + size])
        subset_pledges = np.concatenate([subset_pledges, subset_pledges + pledge])
    qualifying = subset_sizes >= need
    if not qualifying.any():
        raise NoCoalitionError("no coalition reaches the target size")
    return float(subset_pledges[qualifying].min())


def _fractional_cover(sizes: np.ndarray, pledges: np.ndarray, need: float) -> float:
    # Optimal fractional cover: fill by pledge-per-size density.
    order = np.lexsort((np.arange(len(sizes)), pledges / sizes))
    cost = 0.0
    covered = 0.0
    for i in order:
        if covered >= need:
            break
        take = min(float(sizes[i]), need - covered)
        cost += float(pledges[i]) * take / float(sizes[i])
        covered += take
    return cost


def _greedy_cover(sizes: np.ndarray, pledges: np.ndarray, need: float) -> float:
    # Integral cover candidate: whole items in density order.
    order = np.lexsort((np.arange(len(sizes)), pledges / sizes))
    cost = 0.0
    covered = 0.0
    for i in order:
        if covered >= need:
            break
        cost += float(pledges[i])
        covered += float(sizes[i])
    return cost


def _min_budget_dp(
    weights: np.ndarray, sizes: np.ndarray, need: float, budget: int
) -> np.ndarray | None:
    """0/1 DP over scaled-pledge budgets 0..budget maximizing covered size.

    Returns the boolean item mask of the cheapest-budget coalition reaching
    ``need``, or None when no coalition within the budget reaches it. The
    caller guarantees some known coalition fits the budget, so trimming the
    axis there never cuts off the optimum.
    """
    budget = min(budget, int(weights.sum()))
    dp = np.zeros(budget + 1)
    take = np.zeros((len(weights), budget + 1), dtype=bool)
    for i, (w, s) in enumerate(zip(weights, sizes)):
        w = int(w)
        if w > budget:
            continue
        if w == 0:
            candidate = dp + float(s)
        else:
            candidate = np.full(budget + 1, -np.inf)
            candidate[w:] = dp[: budget + 1 - w] + float(s)
        better = candidate > dp
        take[i] = better
        dp = np.where(better, candidate, dp)
    reaching = dp >= need
    if not reaching.any():
        return None
    b = int(np.argmax(reaching))
    chosen = np.zeros(len(weights), dtype=bool)
    for i in reversed(range(len(weights))):
        if take[i, b]:
            chosen[i] = True
            b -= int(weights[i])
    return chosen


def decentralization_fptas(
    pools: PublicPoolProfile, ell: float, eps_approx: float = 0.01
) -> float:
    """Approximate minimum coalition pledge within a (1 + eps_approx) factor.

    Pledges are floored to integer multiples of a scale tied to a fractional
    lower bound of the optimum, then a budgeted DP finds the cheapest scaled
    coalition covering the size target. The reported value is the chosen
    coalition's true pledge mass, so it always weakly exceeds the exact
    optimum. When the scale would blow up the budget range, the largest
    pledge of the optimal coalition is guessed instead (one DP per candidate),
    which keeps the same guarantee.
    """
    if eps_approx <= 0:
        raise ValueError(f"eps_approx must be positive, got {eps_approx!r}")
    if pools.k == 0:
        return 0.0
    need = _coverage_need(pools, ell)
    if need <= 0:
        return 0.0
    sizes = np.asarray(pools.sizes, dtype=np.float64)
    pledges = np.asarray(pools.pledges, dtype=np.float64)
    if float(sizes.sum()) < need:
        raise NoCoalitionError("no coalition reaches the target size")

    upper = float(pledges.sum())
    covering = sizes >= need
    if covering.any():
        upper = min(upper, float(pledges[covering].min()))
    upper = min(upper, _greedy_cover(sizes, pledges, need))
    keep = pledges <= upper * (1 + 1e-12)
    sizes = sizes[keep]
    pledges = pledges[keep]

    k = len(pledges)
    lower = _fractional_cover(sizes, pledges, need)
    scale = eps_approx * lower / k
    weights = np.floor(pledges / scale).astype(np.int64)
    # Budgets beyond the scaled cost of the known cover are never optimal.
    budget = int(math.floor(upper / scale))
    budget_cap = int(2 * k * k / eps_approx) + k + 1
    if budget <= budget_cap:
        chosen = _min_budget_dp(weights, sizes, need, budget)
        if chosen is None:
            raise NoCoalitionError("no coalition reaches the target size")
        return float(pledges[chosen].sum())

    # The fractional bound is too far below the optimum for one DP; guess the
    # largest pledge in the optimal coalition instead (one DP per candidate).
    best = math.inf
    for guess in sorted(set(pledges.tolist())):
        mask = pledges <= guess * (1 + 1e-12)
        if float(sizes[mask].sum()) < need:
            continue
        k_g = int(mask.sum())
        upper_g = min(upper, _greedy_cover(sizes[mask], pledges[mask], need))
        scale_g = eps_approx * guess / k_g
        weights_g = np.floor(pledges[mask] / scale_g).astype(np.int64)
        chosen = _min_budget_dp(
            weights_g, sizes[mask], need, int(math.floor(upper_g / scale_g))
        )
        if chosen is None:
            continue
        best = min(best, float(pledges[mask][chosen].sum()))
    if not math.isfinite(best):
        raise NoCoalitionError("no coalition reaches the target size")
    return best


def decentralization(
    pools: PublicPoolProfile,
    ell: float,
    eps_approx: float = 0.01,
    exact_limit: int = EXACT_POOL_LIMIT,
) -> tuple[float, str]:
    """Dispatch to the exact solver for small pool counts, else the FPTAS.

    Returns (value, method).
    """
    if pools.k <= exact_limit:
        return decentralization_exact(pools, ell), "exact"
    return decentralization_fptas(pools, ell, eps_approx), "fptas"


def evaluate_objectives(
    profile: StrategyProfile,
    scheme: RewardScheme,
    ell: float,
    eps_approx: float = 0.01,
    include_idle_epsilon: bool = False,
) -> ObjectiveReport:
    """All three objectives for one concrete profile."""
    pools = reduce_profile(profile)
    value, method = decentralization(pools, ell, eps_approx)
    return ObjectiveReport(
        participation=participation(pools),
        expenditure=expenditure(profile, scheme, include_idle_epsilon),
        decentralization=value,
        ell=ell,
        method=method,
        eps_approx=eps_approx if method == "fptas" else None,
    )
