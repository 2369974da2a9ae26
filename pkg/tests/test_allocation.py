import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from delegation_lab import (
    PlayerType,
    Role,
    ThresholdStrategy,
    build_representative_pne,
    check_pne_sufficient,
    greedy_delegation,
    participation,
    reduce_profile,
    reference_pledges,
    stability_summary,
)
from delegation_lab.allocation import InfeasibleAllocationError, UnstableDrawError


class TestReferencePledges:
    def test_affine_grid(self):
        assert reference_pledges(30.0, 90.0, 4).values == (30.0, 50.0, 70.0, 90.0)

    def test_degenerate_range(self):
        assert reference_pledges(42.0, 42.0, 3).values == (42.0, 42.0, 42.0)

    def test_single_point(self):
        assert reference_pledges(30.0, 90.0, 1).values == (30.0,)

    def test_endpoints(self):
        grid = reference_pledges(12.5, 97.25, 100).values
        assert len(grid) == 100
        assert grid[0] == 12.5
        assert grid[-1] == 97.25

    def test_zero_points_rejected(self):
        with pytest.raises(ValueError):
            reference_pledges(1.0, 2.0, 0)

    def test_inverted_range_rejected(self):
        with pytest.raises(ValueError):
            reference_pledges(2.0, 1.0, 3)


class TestGreedyDelegation:
    def test_trace(self):
        beta = greedy_delegation(60.0, [1.0, 1.0], [10.0, 10.0], [30.0, 60.0], 8.0)
        assert beta == [1.0, 7.0]

    def test_total_equal_to_deficits(self):
        beta = greedy_delegation(60.0, [1.0, 2.0], [10.0, 10.0], [30.0, 60.0], 3.0)
        assert beta == [1.0, 2.0]

    def test_equidistant_tie_goes_to_lowest_index(self):
        beta = greedy_delegation(60.0, [0.0, 0.0], [5.0, 5.0], [50.0, 70.0], 6.0)
        assert beta == [5.0, 1.0]

    def test_total_out_of_range(self):
        with pytest.raises(InfeasibleAllocationError):
            greedy_delegation(60.0, [1.0, 1.0], [2.0, 2.0], [30.0, 60.0], 10.0)
        with pytest.raises(InfeasibleAllocationError):
            greedy_delegation(60.0, [1.0, 1.0], [2.0, 2.0], [30.0, 60.0], 1.0)

    def test_infinite_bounds_rejected(self):
        with pytest.raises(InfeasibleAllocationError):
            greedy_delegation(60.0, [math.inf], [math.inf], [30.0], 5.0)

    @settings(max_examples=200, deadline=None)
    @given(data=st.data(), k=st.integers(1, 6))
    def test_box_constraints_and_exact_total(self, data, k):
        deficits = [
            data.draw(st.floats(0.0, 5.0), label=f"d{i}") for i in range(k)
        ]
        rooms = [data.draw(st.floats(0.0, 20.0), label=f"r{i}") for i in range(k)]
        capacities = [d + r for d, r in zip(deficits, rooms)]
        pledges = [data.draw(st.floats(1.0, 100.0), label=f"p{i}") for i in range(k)]
        frac = data.draw(st.floats(0.0, 1.0), label="frac")
        lo, hi = sum(deficits), sum(capacities)
        total = lo + frac * (hi - lo)
        reference = data.draw(st.floats(1.0, 100.0), label="ref")
        beta = greedy_delegation(reference, deficits, capacities, pledges, total)
        for b, d, c in zip(beta, deficits, capacities):
            assert d - 1e-9 <= b <= c + 1e-9 * max(1.0, c)
        assert math.fsum(beta) == pytest.approx(total, rel=1e-9, abs=1e-9)
        # Greedy filling leaves at most one pool strictly between its bounds.
        partial = sum(
            1 for b, d, c in zip(beta, deficits, capacities) if d < b < c
        )
        assert partial <= 1


class TestBuildRepresentativePne:
    def test_four_agent_reference_30(self, identity_scheme, four_agents):
        strategy = ThresholdStrategy(30.0)
        profile = build_representative_pne(strategy, four_agents, identity_scheme, 30.0)
        assert [a.role for a in profile.actions] == [
            Role.DELEGATE,
            Role.DELEGATE,
            Role.SPO,
            Role.SPO,
        ]
        pools = reduce_profile(profile)
        summary = stability_summary(strategy, four_agents, identity_scheme)
        d3 = summary.per_pool_bounds[1].deficit
        # Pool 2 is nearest the reference: it takes everything beyond pool 3's
        # deficit.
        assert pools.external[1] == pytest.approx(d3, rel=1e-9)
        assert pools.external[0] == pytest.approx(30.9 - d3, rel=1e-9)
        assert check_pne_sufficient(profile, identity_scheme).sufficient

    def test_reference_at_max_concentrates_on_largest_pool(
        self, identity_scheme, four_agents
    ):
        profile = build_representative_pne(
            ThresholdStrategy(30.0), four_agents, identity_scheme, 90.0
        )
        pools = reduce_profile(profile)
        summary = stability_summary(
            ThresholdStrategy(30.0), four_agents, identity_scheme
        )
        d2 = summary.per_pool_bounds[0].deficit
        assert pools.external[0] == pytest.approx(d2, rel=1e-9)
        assert pools.external[1] == pytest.approx(30.9 - d2, rel=1e-9)

    def test_high_idle_utility_leaves_small_agents_idle(self, identity_scheme):
        types = (
            PlayerType(1.0, 0.5, 10.0),
            PlayerType(29.9, 0.5, 10.0),
            PlayerType(30.0, 0.5, 0.01),
            PlayerType(90.0, 0.5, 0.01),
        )
        strategy = ThresholdStrategy(30.0)
        summary = stability_summary(strategy, types, identity_scheme)
        # Only agent 1 clears r * s >= eps (r * 29.9 ~ 29.5 >= 10; r * 1 < 10).
        profile = build_representative_pne(strategy, types, identity_scheme, 30.0, summary)
        assert profile.actions[0].role is Role.IDLE
        assert profile.actions[1].role is Role.DELEGATE

    def test_unstable_draw_refused(self, four_agents):
        from delegation_lab import RewardScheme

        scheme = RewardScheme(
            a_coeffs=(0.0, 1.0), b_coeffs=(0.0,), cap=200.0, c_min=0.4, c_max=0.6
        )
        with pytest.raises(UnstableDrawError):
            build_representative_pne(ThresholdStrategy(30.0), four_agents, scheme, 30.0)

    def test_participation_is_reference_invariant(self, identity_scheme, four_agents):
        strategy = ThresholdStrategy(30.0)
        summary = stability_summary(strategy, four_agents, identity_scheme)
        values = set()
        for ref in reference_pledges(30.0, 90.0, 7).values:
            profile = build_representative_pne(
                strategy, four_agents, identity_scheme, ref, summary
            )
            values.add(round(participation(reduce_profile(profile)), 9))
        assert len(values) == 1

    def test_delegator_maps_sum_to_stakes(self, identity_scheme, four_agents):
        profile = build_representative_pne(
            ThresholdStrategy(30.0), four_agents, identity_scheme, 50.0
        )
        for action, ptype in zip(profile.actions, profile.types):
            if action.role is Role.DELEGATE:
                assert math.fsum(action.delegations.values()) == pytest.approx(
                    ptype.stake, rel=1e-9
                )


def test_representative_is_pne_for_many_random_stable_draws():
    from _generators import random_representative

    rng = np.random.default_rng(23)
    built = 0
    for _ in range(250):
        result = random_representative(rng, max_agents=8)
        if result is None:
            continue
        built += 1
        profile, scheme = result
        verdict = check_pne_sufficient(profile, scheme)
        assert verdict.sufficient, verdict.violations
    assert built >= 25
