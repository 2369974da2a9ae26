import json
import math

import numpy as np
import pytest

from delegation_lab import (
    Action,
    PlayerType,
    RewardScheme,
    StabilityVerdict,
    StrategyProfile,
    ThresholdStrategy,
    agent_utility,
    apply_strategy,
    check_pne_sufficient,
    deviation_oracle,
    max_delegate_context,
    stability_summary,
)
from _generators import random_profile, random_representative, random_scheme, random_types

RATE_4AGENT = 29.5 / 29.9  # alpha(29.9, 0.4), the pivotal rate of the fixture


class TestApplyStrategy:
    def test_boundary_stake_is_spo(self, four_agents):
        assert apply_strategy(ThresholdStrategy(30.0), four_agents) == (2, 3)

    def test_zero_threshold(self, four_agents):
        assert apply_strategy(ThresholdStrategy(0.0), four_agents) == (0, 1, 2, 3)

    def test_threshold_above_all(self, four_agents):
        assert apply_strategy(ThresholdStrategy(1000.0), four_agents) == ()


class TestStabilitySummary:
    def test_four_agent_instance(self, identity_scheme, four_agents):
        summary = stability_summary(ThresholdStrategy(30.0), four_agents, identity_scheme)
        assert summary.pivotal_stake == 29.9
        assert summary.rate == pytest.approx(RATE_4AGENT, rel=1e-12)
        assert summary.delegation == pytest.approx(30.9)
        expected_def = 0.1 / (30.0 - RATE_4AGENT) + 0.1 / (90.0 - RATE_4AGENT)
        assert summary.deficit == pytest.approx(expected_def, rel=1e-9)
        expected_cap = (30.0 * 170.0 - 0.1) / RATE_4AGENT + (90.0 * 110.0 - 0.1) / RATE_4AGENT
        assert summary.capacity == pytest.approx(expected_cap, rel=1e-9)
        assert summary.stable
        assert summary.verdict is StabilityVerdict.STABLE
        assert summary.spo_indices == (2, 3)
        assert len(summary.per_pool_bounds) == 2

    def test_no_spos_is_degenerate(self, identity_scheme, four_agents):
        summary = stability_summary(ThresholdStrategy(500.0), four_agents, identity_scheme)
        assert summary.verdict is StabilityVerdict.STABLE_DEGENERATE
        assert not summary.stable
        assert summary.delegation == summary.deficit == summary.capacity == 0.0

    def test_zero_rate_corner_is_unstable(self, identity_scheme):
        # Every non-operator prefers idling to any delegation rate they could
        # trigger, so the rate collapses to zero and deficits go uncovered.
        types = (
            PlayerType(stake=1.0, cost=0.5, idle_utility=5.0),
            PlayerType(stake=30.0, cost=0.5, idle_utility=0.01),
        )
        summary = stability_summary(ThresholdStrategy(30.0), types, identity_scheme)
        assert summary.rate == 0.0
        assert summary.delegation == 0.0
        assert summary.deficit > 0.0
        assert not summary.stable
        assert summary.verdict is StabilityVerdict.UNSTABLE

    def test_infinite_deficit_blocks_stability(self, four_agents):
        # b == 0 pays nothing for delegation, so no pool can retain an operator.
        scheme = RewardScheme(
            a_coeffs=(0.0, 1.0), b_coeffs=(0.0,), cap=200.0, c_min=0.4, c_max=0.6
        )
        summary = stability_summary(ThresholdStrategy(30.0), four_agents, scheme)
        assert summary.deficit == math.inf
        assert not summary.stable

    def test_adding_delegator_raises_rate(self, identity_scheme, four_agents):
        profile_small = StrategyProfile(
            actions=(Action.delegate({2: 1.0}), Action.idle(), Action.spo(), Action.spo()),
            types=four_agents,
        )
        profile_both = StrategyProfile(
            actions=(
                Action.delegate({2: 1.0}),
                Action.delegate({2: 29.9}),
                Action.spo(),
                Action.spo(),
            ),
            types=four_agents,
        )
        small = max_delegate_context(profile_small, identity_scheme)
        both = max_delegate_context(profile_both, identity_scheme)
        assert both.pivotal_stake >= small.pivotal_stake
        assert both.rate >= small.rate


class TestCheckPneSufficient:
    def test_all_idle_is_sufficient(self, identity_scheme):
        # Stakes too small for a solo pool to beat the idle utility, so with
        # no pools every condition holds vacuously.
        types = tuple(
            PlayerType(stake=s, cost=0.5, idle_utility=0.01) for s in (0.3, 0.45, 0.2)
        )
        profile = StrategyProfile(actions=(Action.idle(),) * 3, types=types)
        verdict = check_pne_sufficient(profile, identity_scheme)
        assert verdict.sufficient
        assert verdict.violations == ()

    def test_all_idle_with_profitable_solo_pool_is_not_sufficient(
        self, identity_scheme, four_agents
    ):
        # Agent 3 could open a pool worth a(90) - 0.5 >> 0.01, so idling for
        # everyone cannot be certified as an equilibrium.
        profile = StrategyProfile(actions=(Action.idle(),) * 4, types=four_agents)
        verdict = check_pne_sufficient(profile, identity_scheme)
        assert not verdict.sufficient
        assert any(
            v.condition == "idle_best_response" for v in verdict.violations
        )

    def test_four_agent_equilibrium(self, identity_scheme, four_agents):
        summary = stability_summary(ThresholdStrategy(30.0), four_agents, identity_scheme)
        d2, d3 = (b.deficit for b in summary.per_pool_bounds)
        profile = StrategyProfile(
            actions=(
                Action.delegate({2: 1.0}),
                Action.delegate({2: d2 + 0.5, 3: 29.9 - d2 - 0.5}),
                Action.spo(),
                Action.spo(),
            ),
            types=four_agents,
        )
        verdict = check_pne_sufficient(profile, identity_scheme)
        assert verdict.sufficient, verdict.violations

    def test_capacity_violation_under_tight_cap(self, four_agents):
        # Same instance with cap 31: pool 2 can hold barely any delegation.
        scheme = RewardScheme(
            a_coeffs=(0.0, 1.0), b_coeffs=(0.0, 1.0), cap=31.0, c_min=0.4, c_max=0.6
        )
        profile = StrategyProfile(
            actions=(
                Action.delegate({2: 1.0}),
                Action.delegate({2: 29.9}),
                Action.spo(),
                Action.spo(),
            ),
            types=four_agents,
        )
        verdict = check_pne_sufficient(profile, scheme)
        assert not verdict.sufficient
        assert any(
            v.agent == 2 and v.condition == "capacity" for v in verdict.violations
        )

    def test_delegation_to_inactive_pool_violates(self, identity_scheme):
        types = (
            PlayerType(5.0, 0.5, 0.01),
            PlayerType(30.0, 0.5, 0.01),
            PlayerType(40.0, 0.5, 0.01),
        )
        profile = StrategyProfile(
            actions=(Action.delegate({1: 5.0}), Action.idle(), Action.spo()),
            types=types,
        )
        verdict = check_pne_sufficient(profile, identity_scheme)
        assert not verdict.sufficient
        assert any(
            v.agent == 0 and v.condition == "feasible_target" for v in verdict.violations
        )

    def test_idle_agent_who_should_delegate_violates(self, identity_scheme):
        types = (
            PlayerType(20.0, 0.5, 0.01),
            PlayerType(10.0, 0.5, 0.01),
            PlayerType(40.0, 0.5, 0.01),
        )
        profile = StrategyProfile(
            actions=(Action.idle(), Action.delegate({2: 10.0}), Action.spo()),
            types=types,
        )
        verdict = check_pne_sufficient(profile, identity_scheme)
        assert any(
            v.agent == 0 and v.condition == "idle_best_response"
            for v in verdict.violations
        )

    def test_verdict_serializes_to_json(self, identity_scheme):
        types = (
            PlayerType(5.0, 0.5, 0.01),
            PlayerType(30.0, 0.5, 0.01),
        )
        profile = StrategyProfile(
            actions=(Action.delegate({1: 5.0}), Action.idle()), types=types
        )
        verdict = check_pne_sufficient(profile, identity_scheme)
        payload = json.loads(verdict.to_json())
        assert payload["sufficient"] is False
        assert payload["violations"][0]["agent"] == 0
        assert "slack" in payload["violations"][0]


class TestDeviationOracle:
    def test_small_idle_agent_gets_rate_on_stake(self, identity_scheme, four_agents):
        # Idle agent 0 (stake 1) deviating to delegate earns about r * 1.
        profile = StrategyProfile(
            actions=(Action.idle(), Action.delegate({2: 29.9}), Action.spo(), Action.spo()),
            types=four_agents,
        )
        best = deviation_oracle(profile, identity_scheme, 0)
        assert best == pytest.approx(RATE_4AGENT * 1.0, rel=1e-9)

    def test_large_idle_agent_becomes_pivotal(self, identity_scheme):
        types = (
            PlayerType(50.0, 0.5, 0.01),
            PlayerType(10.0, 0.5, 0.01),
            PlayerType(60.0, 0.5, 0.01),
        )
        profile = StrategyProfile(
            actions=(Action.idle(), Action.delegate({2: 10.0}), Action.spo()),
            types=types,
        )
        best = deviation_oracle(profile, identity_scheme, 0)
        assert best == pytest.approx((50.0 - 0.4) / 50.0 * 50.0, rel=1e-9)

    def test_spo_solo_deviation_value(self, identity_scheme, four_agents):
        profile = StrategyProfile(
            actions=(Action.idle(), Action.idle(), Action.spo(), Action.spo()),
            types=four_agents,
        )
        # With nobody delegating, agent 2's best alternative among the
        # structured deviations includes the solo pool at a(30) - c.
        best = deviation_oracle(profile, identity_scheme, 2)
        assert best >= 30.0 - 0.5 - 1e-12

    def test_oracle_agrees_with_check_on_random_instances(self):
        rng = np.random.default_rng(7)
        checked = 0
        for _ in range(400):
            scheme = random_scheme(rng)
            types = random_types(rng, int(rng.integers(2, 7)), scheme)
            profile = random_profile(rng, types)
            verdict = check_pne_sufficient(profile, scheme)
            if not verdict.sufficient:
                continue
            checked += 1
            for i in range(profile.n):
                current = agent_utility(profile, scheme, i)
                best = deviation_oracle(profile, scheme, i)
                assert best <= current + 1e-9 * max(1.0, abs(current)), (
                    f"agent {i} improves from {current} to {best}"
                )
        assert checked >= 5  # the sample must exercise the sufficient branch

    def test_representative_profiles_are_oracle_stable(self):
        rng = np.random.default_rng(11)
        built = 0
        for _ in range(200):
            result = random_representative(rng)
            if result is None:
                continue
            built += 1
            profile, scheme = result
            assert check_pne_sufficient(profile, scheme).sufficient
            for i in range(profile.n):
                current = agent_utility(profile, scheme, i)
                best = deviation_oracle(profile, scheme, i)
                assert best <= current + 1e-9 * max(1.0, abs(current))
        assert built >= 20
