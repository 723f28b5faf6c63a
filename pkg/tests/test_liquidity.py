import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from allocbench.estimation import estimate_moments
from allocbench.exceptions import ConfigError, DataError, InfeasibleError, NumericalWarning
from allocbench.liquidity import BoundsSpec, LiquiditySpec, compute_caps
from allocbench.strategies import STRATEGIES, solve_strategy

SPEC = LiquiditySpec(investment_sum=1e7, volume_fraction=0.01)


def test_cap_examples():
    v = np.array([[1e9, 1e7, 1e5]] * 3)
    b = compute_caps(v, SPEC, liquid=[False, False, True])
    np.testing.assert_allclose(b.caps, [1.0, 0.01, 1.0])
    assert not b.repaired


def test_repair_when_caps_too_small():
    v = np.full((5, 3), 1e8)  # each cap 0.1
    with pytest.warns(NumericalWarning, match="rescaling"):
        b = compute_caps(v, SPEC)
    assert b.repaired
    np.testing.assert_allclose(b.caps, [1 / 3] * 3)
    np.testing.assert_allclose(b.raw_caps, [0.1] * 3)


def test_lookback_and_errors():
    v = np.vstack([np.full((5, 2), 1e6), np.full((2, 2), 1e9)])
    b = compute_caps(v, LiquiditySpec(1e7, 0.01, lookback=2))
    np.testing.assert_allclose(b.caps, [1, 1])
    with pytest.raises(DataError):
        compute_caps(np.zeros((3, 2)), SPEC)
    with pytest.raises(DataError):
        compute_caps(np.full((3, 2), -1.0), SPEC)
    for bad in (dict(investment_sum=0), dict(volume_fraction=0), dict(volume_fraction=1.5), dict(lookback=0)):
        with pytest.raises(ConfigError):
            LiquiditySpec(**bad)
    with pytest.raises(InfeasibleError):
        BoundsSpec([0.2, 0.2])


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(1e5, 1e9), st.floats(1.1, 10))
def test_caps_monotone(seed, inv, factor):
    rng = np.random.default_rng(seed)
    v = 10 ** rng.uniform(5, 10, (20, 4))
    import warnings

    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NumericalWarning)
        base = compute_caps(v, LiquiditySpec(inv)).raw_caps
        more_vol = v.copy()
        more_vol[:, 0] *= factor
        assert compute_caps(more_vol, LiquiditySpec(inv)).raw_caps[0] >= base[0]
        assert np.all(compute_caps(v, LiquiditySpec(inv * factor)).raw_caps <= base)


def test_tiny_investment_sum_equals_uncapped():
    rng = np.random.default_rng(0)
    x = rng.normal(0.001, 0.02, (150, 4))
    v = 10 ** rng.uniform(5, 8, (150, 4))
    caps = compute_caps(v, LiquiditySpec(investment_sum=1e-6)).caps
    np.testing.assert_array_equal(caps, np.ones(4))
    est = estimate_moments(x)
    for name in STRATEGIES:
        a = solve_strategy(name, x, est, caps)
        b = solve_strategy(name, x, est, None)
        np.testing.assert_allclose(a, b, atol=1e-10)
