"""Core domain types for stake-delegation games.

Agents hold a public stake and choose between running a stake pool (pledging
their whole stake), delegating their whole stake across active pools, or
staying idle. These types carry no game logic beyond construction checks and
the reduction of a full strategy profile to its public pool view.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

__all__ = [
    "ValidationError",
    "PlayerType",
    "RewardScheme",
    "Role",
    "Action",
    "StrategyProfile",
    "PublicPoolProfile",
    "reduce_profile",
    "load_population_csv",
    "save_population_csv",
    "load_profile_csv",
    "save_profile_csv",
]

# Relative slack used only when validating float delegation sums; the reward
# formulas themselves are evaluated exactly.
SUM_REL_TOL = 1e-9


class ValidationError(ValueError):
    """A domain object violates one of its structural invariants."""


@dataclass(frozen=True)
class PlayerType:
    """One agent's stake, pool operating cost, and idle utility."""

    stake: float
    cost: float
    idle_utility: float

    def __post_init__(self) -> None:
        if not self.stake > 0:
            raise ValidationError(f"stake must be positive, got {self.stake!r}")
        if not self.cost >= 0:
            raise ValidationError(f"cost must be non-negative, got {self.cost!r}")
        if not self.idle_utility > 0:
            raise ValidationError(
                f"idle_utility must be positive, got {self.idle_utility!r}"
            )


def _poly_eval(coeffs: Sequence[float], x: float) -> float:
    # Horner, constant term first.
    acc = 0.0
    for c in reversed(coeffs):
        acc = acc * x + c
    return acc


@dataclass(frozen=True)
class RewardScheme:
    """Capped separable pool reward plus the public cost bounds.

    A pool with pledge ``lam`` and external delegation ``beta`` earns
    ``a(lam') + b(lam') * beta'`` where ``lam' = min(cap, lam)`` and
    ``beta' = min(cap - lam', beta)``. Both components are polynomials with
    non-negative coefficients (constant term first), which keeps the solo-pool
    rate increasing in pledge.
    """

    a_coeffs: tuple[float, ...]
    b_coeffs: tuple[float, ...]
    cap: float
    c_min: float
    c_max: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "a_coeffs", tuple(float(z) for z in self.a_coeffs))
        object.__setattr__(self, "b_coeffs", tuple(float(z) for z in self.b_coeffs))
        if not self.a_coeffs or not self.b_coeffs:
            raise ValidationError("a_coeffs and b_coeffs must be non-empty")
        if any(z < 0 for z in self.a_coeffs) or any(z < 0 for z in self.b_coeffs):
            raise ValidationError("reward polynomial coefficients must be >= 0")
        if self.a_coeffs[0] != 0.0:
            # A constant pledge reward would make the solo-pool rate decrease
            # at small stakes, breaking the uniform-rate construction.
            raise ValidationError("a_coeffs must have zero constant term")
        if not self.cap > 0:
            raise ValidationError(f"cap must be positive, got {self.cap!r}")
        if not 0 <= self.c_min <= self.c_max:
            raise ValidationError(
                f"need 0 <= c_min <= c_max, got [{self.c_min!r}, {self.c_max!r}]"
            )

    def a(self, x: float) -> float:
        """Pledge reward component a(x)."""
        return _poly_eval(self.a_coeffs, x)

    def b(self, x: float) -> float:
        """External delegation reward component b(x)."""
        return _poly_eval(self.b_coeffs, x)

    def is_proper_for(self, stakes: Iterable[float]) -> bool:
        """True when every stake is strictly below the pool cap."""
        return all(s < self.cap for s in stakes)


class Role(enum.Enum):
    IDLE = "idle"
    SPO = "spo"
    DELEGATE = "delegate"


@dataclass(frozen=True)
class Action:
    """High-level action of one agent.

    ``delegations`` maps pool-owner index to stake amount and is only
    meaningful for the DELEGATE role. Treat instances as immutable.
    """

    role: Role
    delegations: Mapping[int, float] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.role is Role.DELEGATE:
            if not self.delegations:
                raise ValidationError("a delegating agent needs at least one target")
            if any(amount < 0 for amount in self.delegations.values()):
                raise ValidationError("delegation amounts must be non-negative")
        elif self.delegations:
            raise ValidationError(f"{self.role.value} action cannot carry delegations")

    @classmethod
    def idle(cls) -> "Action":
        return cls(Role.IDLE)

    @classmethod
    def spo(cls) -> "Action":
        return cls(Role.SPO)

    @classmethod
    def delegate(cls, delegations: Mapping[int, float]) -> "Action":
        return cls(Role.DELEGATE, dict(delegations))


@dataclass(frozen=True)
class StrategyProfile:
    """Joint strategy profile: one action per agent plus the agents' types.

    Delegating to an agent that is not an SPO is legal but earns nothing;
    such stake is reported by :meth:`wasted_delegation` rather than dropped
    silently at construction.
    """

    actions: tuple[Action, ...]
    types: tuple[PlayerType, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "actions", tuple(self.actions))
        object.__setattr__(self, "types", tuple(self.types))
        if len(self.actions) != len(self.types):
            raise ValidationError(
                f"{len(self.actions)} actions for {len(self.types)} agents"
            )
        n = len(self.actions)
        for i, (action, ptype) in enumerate(zip(self.actions, self.types)):
            if action.role is not Role.DELEGATE:
                continue
            if i in action.delegations:
                raise ValidationError(f"agent {i} delegates to itself")
            for j in action.delegations:
                if not 0 <= j < n:
                    raise ValidationError(
                        f"agent {i} delegates to out-of-range index {j}"
                    )
            total = math.fsum(action.delegations.values())
            if not math.isclose(total, ptype.stake, rel_tol=SUM_REL_TOL, abs_tol=0.0):
                raise ValidationError(
                    f"agent {i} delegates {total!r}, stake is {ptype.stake!r}"
                )

    @property
    def n(self) -> int:
        return len(self.actions)

    def role(self, i: int) -> Role:
        return self.actions[i].role

    def spo_indices(self) -> tuple[int, ...]:
        return tuple(i for i, a in enumerate(self.actions) if a.role is Role.SPO)

    def delegator_indices(self) -> tuple[int, ...]:
        return tuple(i for i, a in enumerate(self.actions) if a.role is Role.DELEGATE)

    def external_by_pool(self) -> dict[int, float]:
        """Total delegated stake per active pool (keyed by SPO index)."""
        totals: dict[int, float] = {j: 0.0 for j in self.spo_indices()}
        for i in self.delegator_indices():
            for j, amount in self.actions[i].delegations.items():
                if j in totals:
                    totals[j] += amount
        return totals

    def wasted_delegation(self) -> float:
        """Stake delegated to agents that are not running a pool."""
        spos = set(self.spo_indices())
        return math.fsum(
            amount
            for i in self.delegator_indices()
            for j, amount in self.actions[i].delegations.items()
            if j not in spos
        )

    def total_stake(self) -> float:
        return math.fsum(t.stake for t in self.types)


@dataclass(frozen=True)
class PublicPoolProfile:
    """Public view of the active pools: pledge and external stake per pool."""

    pledges: tuple[float, ...]
    external: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "pledges", tuple(float(x) for x in self.pledges))
        object.__setattr__(self, "external", tuple(float(x) for x in self.external))
        if len(self.pledges) != len(self.external):
            raise ValidationError("pledges and external must have equal length")
        if any(lam <= 0 for lam in self.pledges):
            raise ValidationError("pool pledges must be positive")
        if any(beta < 0 for beta in self.external):
            raise ValidationError("external delegation must be non-negative")

    @property
    def k(self) -> int:
        return len(self.pledges)

    @property
    def sizes(self) -> tuple[float, ...]:
        return tuple(l + b for l, b in zip(self.pledges, self.external))


def reduce_profile(profile: StrategyProfile) -> PublicPoolProfile:
    """Collapse a strategy profile to its public pool profile.

    Pool order follows SPO agent order. Delegations to inactive pools
    contribute to no pool.
    """
    spos = profile.spo_indices()
    external = profile.external_by_pool()
    return PublicPoolProfile(
        pledges=tuple(profile.types[j].stake for j in spos),
        external=tuple(external[j] for j in spos),
    )


# ---------------------------------------------------------------------------
# CSV interfaces
# ---------------------------------------------------------------------------

POPULATION_HEADER = ["agent_id", "stake", "cost", "idle_utility"]
PROFILE_HEADER = POPULATION_HEADER + ["action", "delegated_to", "amount"]


def save_population_csv(types: Sequence[PlayerType], path: str | Path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(POPULATION_HEADER)
        for i, t in enumerate(types):
            writer.writerow([i, repr(t.stake), repr(t.cost), repr(t.idle_utility)])


def load_population_csv(path: str | Path) -> tuple[PlayerType, ...]:
    rows = _read_rows(path, POPULATION_HEADER)
    by_id: dict[int, PlayerType] = {}
    for row in rows:
        agent = int(row["agent_id"])
        if agent in by_id:
            raise ValidationError(f"duplicate agent_id {agent}")
        by_id[agent] = PlayerType(
            stake=float(row["stake"]),
            cost=float(row["cost"]),
            idle_utility=float(row["idle_utility"]),
        )
    if set(by_id) != set(range(len(by_id))):
        raise ValidationError("agent_id values must be 0..n-1")
    return tuple(by_id[i] for i in range(len(by_id)))


def save_profile_csv(profile: StrategyProfile, path: str | Path) -> None:
    """One row per agent; delegators get one row per delegation target."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(PROFILE_HEADER)
        for i, (action, t) in enumerate(zip(profile.actions, profile.types)):
            base = [i, repr(t.stake), repr(t.cost), repr(t.idle_utility)]
            if action.role is Role.DELEGATE:
                for j in sorted(action.delegations):
                    writer.writerow(
                        base + [action.role.value, j, repr(action.delegations[j])]
                    )
            else:
                writer.writerow(base + [action.role.value, "", ""])


def load_profile_csv(path: str | Path) -> StrategyProfile:
    rows = _read_rows(path, PROFILE_HEADER)
    types: dict[int, PlayerType] = {}
    roles: dict[int, str] = {}
    delegations: dict[int, dict[int, float]] = {}
    for row in rows:
        agent = int(row["agent_id"])
        ptype = PlayerType(
            stake=float(row["stake"]),
            cost=float(row["cost"]),
            idle_utility=float(row["idle_utility"]),
        )
        if agent in types and types[agent] != ptype:
            raise ValidationError(f"agent {agent} has inconsistent type rows")
        types[agent] = ptype
        role = row["action"].strip().lower()
        if role not in ("idle", "spo", "delegate"):
            raise ValidationError(f"agent {agent}: unknown action {row['action']!r}")
        if agent in roles and roles[agent] != role:
            raise ValidationError(f"agent {agent} has conflicting actions")
        roles[agent] = role
        if role == "delegate":
            target = row["delegated_to"].strip()
            amount = row["amount"].strip()
            if not target or not amount:
                raise ValidationError(
                    f"agent {agent}: delegate row needs delegated_to and amount"
                )
            dmap = delegations.setdefault(agent, {})
            j = int(target)
            dmap[j] = dmap.get(j, 0.0) + float(amount)
    if set(types) != set(range(len(types))):
        raise ValidationError("agent_id values must be 0..n-1")
    actions = []
    for i in range(len(types)):
        role = roles[i]
        if role == "idle":
            actions.append(Action.idle())
        elif role == "spo":
            actions.append(Action.spo())
        else:
            actions.append(Action.delegate(delegations.get(i, {})))
    return StrategyProfile(actions=tuple(actions), types=tuple(types[i] for i in range(len(types))))


def _read_rows(path: str | Path, expected_header: list[str]) -> list[dict[str, str]]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or list(reader.fieldnames) != expected_header:
            raise ValidationError(
                f"{path}: expected header {','.join(expected_header)}, "
                f"got {reader.fieldnames}"
            )
        return list(reader)
