"""Closed-form reward mathematics: pool rewards, the uniform delegation rate,
feasibility, per-agent rewards and utilities, and the gap / deficit / capacity
bounds that pin down when an operator is content with their pool.
"""

from __future__ import annotations

import logging
import math

from .model import RewardScheme, Role, StrategyProfile
from dataclasses import dataclass

__all__ = [
    "PoolBounds",
    "EquilibriumContext",
    "pool_reward",
    "alpha",
    "max_delegate_context",
    "is_feasible",
    "agent_reward",
    "agent_utility",
    "spo_gap",
    "pool_bounds",
]

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class PoolBounds:
    """Gap plus the external-delegation interval on which an SPO stays put.

    Outside the representable interval the pair is (+inf, -inf): no amount of
    delegation keeps the operator content.
    """

    gap: float
    deficit: float
    capacity: float

    def __post_init__(self) -> None:
        degenerate = math.isinf(self.deficit) and self.capacity == -math.inf
        ordered = self.deficit <= self.capacity or math.isclose(
            self.deficit, self.capacity, rel_tol=1e-9, abs_tol=1e-12
        )
        if not degenerate and not ordered:
            raise ValueError(
                f"deficit {self.deficit!r} exceeds capacity {self.capacity!r}"
            )

    @property
    def finite(self) -> bool:
        return math.isfinite(self.deficit) and math.isfinite(self.capacity)

    def contains(self, beta: float) -> bool:
        return self.deficit <= beta <= self.capacity


@dataclass(frozen=True)
class EquilibriumContext:
    """Pivotal delegator stake and the uniform per-unit delegation rate."""

    pivotal_stake: float
    rate: float


def pool_reward(scheme: RewardScheme, pledge: float, external: float) -> float:
    """Reward paid to a pool with the given pledge and external delegation."""
    lam = min(scheme.cap, pledge)
    beta = min(scheme.cap - lam, external)
    return scheme.a(lam) + scheme.b(lam) * beta


def alpha(scheme: RewardScheme, stake: float, cost: float) -> float:
    """Per-unit reward of a solo pool with the given stake and cost."""
    if stake <= 0:
        raise ValueError(f"stake must be positive, got {stake!r}")
    return (pool_reward(scheme, stake, 0.0) - cost) / stake


def max_delegate_context(
    profile: StrategyProfile, scheme: RewardScheme
) -> EquilibriumContext:
    """Pivotal stake over all delegators and the resulting uniform rate.

    With no delegators present both values are zero.
    """
    pivotal = 0.0
    for i in profile.delegator_indices():
        pivotal = max(pivotal, profile.types[i].stake)
    if pivotal == 0.0:
        return EquilibriumContext(pivotal_stake=0.0, rate=0.0)
    return EquilibriumContext(
        pivotal_stake=pivotal, rate=alpha(scheme, pivotal, scheme.c_min)
    )


def is_feasible(
    scheme: RewardScheme, pledge: float, external: float, rate: float
) -> bool:
    """True when the pool's reward covers paying its whole size at ``rate``."""
    return pool_reward(scheme, pledge, external) >= (pledge + external) * rate


def _pool_states(
    profile: StrategyProfile, scheme: RewardScheme, rate: float
) -> dict[int, tuple[float, float, float, bool]]:
    """Per active pool: (pledge, external, reward, feasible)."""
    states = {}
    external = profile.external_by_pool()
    for j in profile.spo_indices():
        lam = profile.types[j].stake
        beta = external[j]
        rho = pool_reward(scheme, lam, beta)
        states[j] = (lam, beta, rho, rho >= (lam + beta) * rate)
    return states


def agent_reward(profile: StrategyProfile, scheme: RewardScheme, agent: int) -> float:
    """Reward of one agent under the uniform-delegation-rate scheme."""
    if not 0 <= agent < profile.n:
        raise IndexError(f"agent index {agent} out of range")
    action = profile.actions[agent]
    if action.role is Role.IDLE:
        return profile.types[agent].idle_utility

    rate = max_delegate_context(profile, scheme).rate
    states = _pool_states(profile, scheme, rate)

    if action.role is Role.SPO:
        lam, beta, rho, feasible = states[agent]
        if feasible:
            return rho - rate * beta
        return (lam / (lam + beta)) * rho

    total = 0.0
    for j, amount in action.delegations.items():
        if j not in states:
            continue  # inactive pool: delegated stake earns nothing
        lam, beta, rho, feasible = states[j]
        if feasible:
            total += rate * amount
        else:
            total += (amount / (lam + beta)) * rho
    return total


def agent_utility(profile: StrategyProfile, scheme: RewardScheme, agent: int) -> float:
    """Reward net of the operating cost for SPOs; reward otherwise."""
    reward = agent_reward(profile, scheme, agent)
    if profile.actions[agent].role is Role.SPO:
        return reward - profile.types[agent].cost
    return reward


def spo_gap(
    scheme: RewardScheme,
    pledge: float,
    cost: float,
    idle_utility: float,
    rate: float,
) -> float:
    """Delegation surplus an SPO must extract to prefer operating.

    The larger of the idle-deviation and delegate-deviation break-even terms.
    """
    if pledge <= 0:
        raise ValueError(f"pledge must be positive, got {pledge!r}")
    lam = min(scheme.cap, pledge)
    idle_branch = idle_utility + cost - scheme.a(lam)
    rent = max(rate - alpha(scheme, pledge, scheme.c_min), 0.0) * pledge
    return max(idle_branch, rent + (cost - scheme.c_min))


def pool_bounds(
    scheme: RewardScheme,
    pledge: float,
    cost: float,
    idle_utility: float,
    rate: float,
) -> PoolBounds:
    """Deficit and capacity of a pool at the given delegation rate.

    ``rate <= 0`` puts no rent on delegation, so a pool that clears its gap
    can absorb unbounded external stake: capacity is +inf in that case (the
    limit of the closed form as the rate approaches zero from above).
    """
    if not 0 < pledge < scheme.cap:
        raise ValueError(f"pledge must lie in (0, cap), got {pledge!r}")
    gap = spo_gap(scheme, pledge, cost, idle_utility, rate)
    b_lam = scheme.b(pledge)
    room = scheme.cap - pledge

    if gap <= 0.0:
        # Outside the two-case closed form, which presumes a positive gap.
        # Zero delegation already satisfies the stay condition, so the
        # deficit clamps to 0; capacity is the exact break-even point.
        log.debug(
            "non-positive gap %.6g at pledge %.6g; deficit clamped to 0", gap, pledge
        )
        return PoolBounds(
            gap=gap,
            deficit=0.0,
            capacity=_stay_region_end(b_lam, rate, room, gap),
        )

    if (b_lam - rate) * room >= gap:
        deficit = gap / (b_lam - rate)
        # At rate <= 0 delegation rent never grows with size, so a pool that
        # clears its gap is content under any amount of delegation.
        capacity = math.inf if rate <= 0.0 else (b_lam * room - gap) / rate
        return PoolBounds(gap=gap, deficit=deficit, capacity=capacity)
    return PoolBounds(gap=gap, deficit=math.inf, capacity=-math.inf)


def _stay_region_end(b_lam: float, rate: float, room: float, gap: float) -> float:
    # Largest beta with b*min(beta, room) - rate*beta >= gap, given gap <= 0.
    if rate <= 0.0:
        return math.inf
    if b_lam >= rate:
        return (b_lam * room - gap) / rate
    crossing = gap / (b_lam - rate)
    if crossing <= room:
        return crossing
    return (b_lam * room - gap) / rate
