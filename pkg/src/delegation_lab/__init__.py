"""Deterministic simulator and analysis toolkit for stake-delegation games."""

from .model import (
    Action,
    PlayerType,
    PublicPoolProfile,
    RewardScheme,
    Role,
    StrategyProfile,
    ValidationError,
    reduce_profile,
)
from .rewards import (
    EquilibriumContext,
    PoolBounds,
    agent_reward,
    agent_utility,
    alpha,
    is_feasible,
    max_delegate_context,
    pool_bounds,
    pool_reward,
    spo_gap,
)
from .equilibrium import (
    PneVerdict,
    PneViolation,
    StabilitySummary,
    StabilityVerdict,
    ThresholdStrategy,
    apply_strategy,
    check_pne_sufficient,
    deviation_oracle,
    stability_summary,
)
from .allocation import (
    InfeasibleAllocationError,
    ReferencePledges,
    UnstableDrawError,
    build_representative_pne,
    greedy_delegation,
    reference_pledges,
)
from .objectives import (
    ObjectiveReport,
    decentralization,
    decentralization_exact,
    decentralization_fptas,
    evaluate_objectives,
    expenditure,
    participation,
)
from .montecarlo import (
    DrawResult,
    ExperimentConfig,
    ExperimentResult,
    G_FUNCTIONS,
    SweepSpec,
    TypeDistribution,
    baseline_config,
    run_draw,
    run_experiment,
    run_sweep,
    sample_pareto,
    sample_population,
    write_results,
)

__version__ = "0.1.0"
