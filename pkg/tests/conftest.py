import pytest

from delegation_lab import PlayerType, RewardScheme


@pytest.fixture
def identity_scheme() -> RewardScheme:
    """a(x) = b(x) = x, cap 200, public cost bounds [0.4, 0.6]."""
    return RewardScheme(
        a_coeffs=(0.0, 1.0), b_coeffs=(0.0, 1.0), cap=200.0, c_min=0.4, c_max=0.6
    )


@pytest.fixture
def four_agents() -> tuple[PlayerType, ...]:
    """Stakes [1, 29.9, 30, 90], uniform cost 0.5 and idle utility 0.01."""
    return tuple(
        PlayerType(stake=s, cost=0.5, idle_utility=0.01) for s in (1.0, 29.9, 30.0, 90.0)
    )
