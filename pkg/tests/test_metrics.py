import math
from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from allocbench.estimation import MomentEstimates
from allocbench.metrics import (
    adjusted_sharpe,
    cumulative_wealth,
    diversification_metrics,
    performance_metrics,
    turnover_metrics,
)

from conftest import random_cov


def record(daily, target=None, drifted=None, mode="linear"):
    target = np.full((3, 2), 0.5) if target is None else np.asarray(target, dtype=float)
    drifted = target if drifted is None else np.asarray(drifted, dtype=float)
    return SimpleNamespace(strategy="X", daily_returns=np.asarray(daily, dtype=float), target_weights=target,
                           drifted_weights=drifted, return_mode=mode)


def test_zero_returns():
    row = performance_metrics(record(np.zeros(10)))
    assert row.cw == 1.0 and row.ceq == 0.0
    assert math.isnan(row.sr) and math.isnan(row.asr)


def test_zero_mean_returns():
    r = np.array([0.01, -0.01] * 5)
    row = performance_metrics(record(r), gamma=2.0)
    assert row.sr == 0.0 and row.asr == 0.0
    assert row.ceq == pytest.approx(-(r.std(ddof=1) ** 2))


def test_sharpe_uses_standard_deviation():
    r = np.random.default_rng(0).normal(0.001, 0.01, 500)
    row = performance_metrics(record(r))
    assert row.sr == pytest.approx(r.mean() / r.std(ddof=1))
    assert row.cw == pytest.approx(1 + r.sum())
    assert row.ceq == pytest.approx(r.mean() - 0.5 * r.var(ddof=1))
    comp = performance_metrics(record(r, mode="compound"))
    assert comp.cw == pytest.approx(math.exp(r.sum()))


def test_asr_reduces_to_sr():
    assert adjusted_sharpe(0.3, 0.0, 0.0) == 0.3
    assert adjusted_sharpe(0.3, -1.0, 0.0) < 0.3
    assert adjusted_sharpe(0.3, 0.0, 3.0) < 0.3


def test_turnover_examples():
    rec = record(np.zeros(4), target=[[1, 0], [1, 0]], drifted=[[0.5, 0.5], [1, 0]])
    assert turnover_metrics(rec) == (1.0, 0.0)
    with pytest.raises(ValueError):
        turnover_metrics(record(np.zeros(2), target=[[1, 0]]))
    row = performance_metrics(record(np.zeros(2) + 0.01, target=[[1, 0]]))
    assert math.isnan(row.to) and math.isnan(row.tto)
    # constant targets, no drift
    rec = record(np.zeros(6), target=[[0.3, 0.7]] * 3)
    assert turnover_metrics(rec) == (0.0, 0.0)


def test_cumulative_wealth_modes():
    np.testing.assert_allclose(cumulative_wealth([0.1, -0.2]), [1, 1.1, 0.9])
    np.testing.assert_allclose(cumulative_wealth([0.1, -0.2], "compound"), [1, math.exp(0.1), math.exp(-0.1)])
    with pytest.raises(ValueError):
        cumulative_wealth([0.1], "simple")


def test_diversification_examples():
    s = np.array([[0.04, 0.01], [0.01, 0.09]])
    est = MomentEstimates.from_arrays([0, 0], s)
    assert diversification_metrics([1, 0], est) == pytest.approx((1.0, 1.0, 1.0))
    est_i = MomentEstimates.from_arrays(np.zeros(4), np.eye(4))
    assert diversification_metrics(np.full(4, 0.25), est_i) == pytest.approx((4.0, 4.0, 4.0))
    est_c = MomentEstimates.from_arrays([0, 0, 0], np.ones((3, 3)))
    assert diversification_metrics([0.2, 0.3, 0.5], est_c)[1] == pytest.approx(1.0)
    est_0 = MomentEstimates.from_arrays([0, 0], np.zeros((2, 2)))
    neff, dr2, p = diversification_metrics([0.5, 0.5], est_0)
    assert neff == 2.0 and math.isnan(dr2) and math.isnan(p)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12))
def test_metric_bounds(seed, n):
    rng = np.random.default_rng(seed)
    s = random_cov(rng, n, nonneg_corr=True)
    w = rng.dirichlet(np.full(n, rng.uniform(0.1, 2)))
    neff, dr2, p = diversification_metrics(w, MomentEstimates.from_arrays(np.zeros(n), s))
    assert 1 - 1e-9 <= neff <= n + 1e-9
    assert 1 - 1e-9 <= dr2 <= n + 1e-9
    assert 1 - 1e-9 <= p <= n + 1e-6


def test_dr2_can_exceed_n_with_negative_correlation():
    # the DR^2 <= N bound needs non-negative correlations: two perfectly
    # anti-correlated assets at inverse-vol weights have zero portfolio risk
    s = np.array([[1.0, -0.99], [-0.99, 1.0]])
    neff, dr2, _ = diversification_metrics([0.5, 0.5], MomentEstimates.from_arrays([0, 0], s))
    assert dr2 > 2


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 20))
def test_inverse_vol_uncorrelated_dr2_equals_n(seed, n):
    vols = 10 ** np.random.default_rng(seed).uniform(-3, 0, n)
    w = (1 / vols) / (1 / vols).sum()
    _, dr2, p = diversification_metrics(w, MomentEstimates.from_arrays(np.zeros(n), np.diag(vols**2)))
    assert dr2 == pytest.approx(n, abs=1e-8)
    assert p == pytest.approx(n, abs=1e-8)
