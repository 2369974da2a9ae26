"""Reference-pledge grids and the greedy delegation allocator used to build
representative ex-post pure Nash equilibria from a stable draw.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

from .equilibrium import StabilitySummary, ThresholdStrategy, stability_summary
from .model import Action, PlayerType, RewardScheme, StrategyProfile

__all__ = [
    "ReferencePledges",
    "reference_pledges",
    "greedy_delegation",
    "UnstableDrawError",
    "InfeasibleAllocationError",
    "build_representative_pne",
]


class UnstableDrawError(ValueError):
    """Representative equilibria can only be built from a stable summary."""


class InfeasibleAllocationError(ValueError):
    """The requested total cannot be split within the given box constraints."""


@dataclass(frozen=True)
class ReferencePledges:
    """Affine grid of pledge values between the smallest and largest pledge."""

    values: tuple[float, ...]

    def __post_init__(self) -> None:
        if not self.values:
            raise ValueError("reference pledge grid cannot be empty")
        if any(b < a for a, b in zip(self.values, self.values[1:])):
            raise ValueError("reference pledges must be non-decreasing")


def reference_pledges(
    lambda_min: float, lambda_max: float, m: int
) -> ReferencePledges:
    """Evenly spaced grid of ``m`` reference pledges over [lambda_min, lambda_max].

    ``m == 1`` degenerates to the single point ``lambda_min``.
    """
    if m < 1:
        raise ValueError(f"m must be at least 1, got {m}")
    if lambda_min > lambda_max:
        raise ValueError(f"need lambda_min <= lambda_max, got {lambda_min} > {lambda_max}")
    if m == 1:
        return ReferencePledges(values=(lambda_min,))
    step = (lambda_max - lambda_min) / (m - 1)
    values = tuple(lambda_min + j * step for j in range(m))
    return ReferencePledges(values=values)


def greedy_delegation(
    reference: float,
    deficits: Sequence[float],
    capacities: Sequence[float],
    pledges: Sequence[float],
    total: float,
) -> list[float]:
    """Split ``total`` delegation across pools, seeding each pool's deficit and
    then filling pools whose pledge is closest to ``reference`` up to capacity.

    Ties on distance go to the lowest pool index. All bounds must be finite;
    the result satisfies ``deficits[i] <= beta[i] <= capacities[i]`` and sums
    to ``total`` (up to float rounding).
    """
    k = len(pledges)
    if not (len(deficits) == len(capacities) == k):
        raise ValueError("deficits, capacities and pledges must have equal length")
    if any(not math.isfinite(x) for x in deficits) or any(
        not math.isfinite(x) for x in capacities
    ):
        raise InfeasibleAllocationError("all bounds must be finite")
    if any(c < d for d, c in zip(deficits, capacities)):
        raise InfeasibleAllocationError("capacity below deficit")
    floor = math.fsum(deficits)
    ceiling = math.fsum(capacities)
    slack = 1e-9 * max(1.0, abs(total))
    if not floor - slack <= total <= ceiling + slack:
        raise InfeasibleAllocationError(
            f"total {total!r} outside [{floor!r}, {ceiling!r}]"
        )

    beta = [float(d) for d in deficits]
    remaining = total - math.fsum(beta)
    order = sorted(range(k), key=lambda i: (abs(pledges[i] - reference), i))
    for i in order:
        if remaining <= 0:
            break
        room = capacities[i] - beta[i]
        if room <= 0:
            continue
        take = min(remaining, room)
        beta[i] += take
        remaining -= take
    if remaining > slack:
        raise InfeasibleAllocationError(
            f"could not place {remaining!r} of {total!r} within capacity"
        )
    return beta


def build_representative_pne(
    strategy: ThresholdStrategy,
    types: Sequence[PlayerType],
    scheme: RewardScheme,
    reference: float,
    summary: StabilitySummary | None = None,
) -> StrategyProfile:
    """Construct one concrete equilibrium consistent with the strategy.

    Operators are fixed by the threshold; every other agent delegates when the
    uniform rate beats their idle utility on their stake, and stays idle
    otherwise. Pool-level delegation follows :func:`greedy_delegation` toward
    the reference pledge, and delegators are assigned to pools by
    water-filling in ascending agent index, which makes the output
    deterministic. All consistent assignments share the same objectives.
    """
    types = tuple(types)
    if summary is None:
        summary = stability_summary(strategy, types, scheme)
    if not summary.stable:
        raise UnstableDrawError(
            f"draw is not ex-post stable (verdict: {summary.verdict.value})"
        )

    spos = summary.spo_indices
    pledges = [types[j].stake for j in spos]
    deficits = [b.deficit for b in summary.per_pool_bounds]
    capacities = [min(b.capacity, summary.delegation) for b in summary.per_pool_bounds]
    targets = greedy_delegation(
        reference, deficits, capacities, pledges, summary.delegation
    )

    rate = summary.rate
    spo_set = set(spos)
    actions: list[Action] = []
    assignments: dict[int, dict[int, float]] = {}
    remaining = list(targets)
    cursor = 0
    last_touched = None
    for i, t in enumerate(types):
        if i in spo_set:
            continue
        if rate * t.stake < t.idle_utility:
            continue
        need = t.stake
        dmap: dict[int, float] = {}
        while need > 0 and cursor < len(spos):
            take = min(need, remaining[cursor])
            if take > 0:
                pool = spos[cursor]
                dmap[pool] = dmap.get(pool, 0.0) + take
                remaining[cursor] -= take
                need -= take
                last_touched = pool
            if remaining[cursor] <= 0:
                cursor += 1
            else:
                break
        if need > 0:
            # Float residue from summing stakes in a different order than the
            # pool targets; park it with the last pool touched.
            if last_touched is None or need > 1e-6 * max(1.0, t.stake):
                raise InfeasibleAllocationError(
                    f"agent {i}: {need!r} stake left after pools were filled"
                )
            dmap[last_touched] = dmap.get(last_touched, 0.0) + need
        assignments[i] = dmap

    for i, t in enumerate(types):
        if i in spo_set:
            actions.append(Action.spo())
        elif i in assignments:
            actions.append(Action.delegate(assignments[i]))
        else:
            actions.append(Action.idle())
    return StrategyProfile(actions=tuple(actions), types=types)
