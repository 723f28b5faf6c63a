import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from allocbench.exceptions import DataError
from allocbench.inference import (
    hac_covariance,
    lw_pairwise_test,
    pairwise_test_matrix,
    significance_tier,
    spanning_tests,
)


def test_identical_series_degenerate():
    r = np.random.default_rng(0).normal(0.001, 0.01, 300)
    for metric in ("SR", "CEQ"):
        res = lw_pairwise_test(r, r, metric)
        assert res.p_value == 1.0 and res.degenerate and res.difference == 0


def test_ceq_shift_rejects():
    r = np.random.default_rng(1).normal(0.0, 0.01, 500)
    noise = np.random.default_rng(2).normal(0, 0.001, 500)
    res = lw_pairwise_test(r + 0.01 + noise, r, "CEQ")
    assert res.p_value < 0.01 and res.difference > 0


def test_too_short_and_bad_metric():
    with pytest.raises(DataError):
        lw_pairwise_test(np.zeros(20), np.zeros(20))
    with pytest.raises(ValueError):
        lw_pairwise_test(np.zeros(40), np.zeros(40), "CW")
    with pytest.raises(ValueError):
        lw_pairwise_test(np.zeros(40), np.zeros(41))


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.floats(0.01, 100.0), st.sampled_from(["parzen", "bartlett", "quadratic-spectral"]))
def test_symmetry_and_scale_invariance(seed, c, kernel):
    rng = np.random.default_rng(seed)
    a = rng.normal(0.001, 0.01, 200)
    b = 0.5 * a + rng.normal(0.0005, 0.01, 200)
    ab = lw_pairwise_test(a, b, "SR", kernel=kernel)
    ba = lw_pairwise_test(b, a, "SR", kernel=kernel)
    assert ab.p_value == pytest.approx(ba.p_value, abs=1e-12)
    assert ab.difference == pytest.approx(-ba.difference, rel=1e-12)
    scaled = lw_pairwise_test(c * a, c * b, "SR", kernel=kernel)
    assert scaled.p_value == pytest.approx(ab.p_value, abs=1e-10)
    ceq_ab = lw_pairwise_test(a, b, "CEQ", kernel=kernel)
    ceq_ba = lw_pairwise_test(b, a, "CEQ", kernel=kernel)
    assert ceq_ab.p_value == pytest.approx(ceq_ba.p_value, abs=1e-12)


def test_hac_white_noise_close_to_sample_cov():
    y = np.random.default_rng(3).standard_normal((5000, 2))
    cov, bw = hac_covariance(y - y.mean(axis=0))
    np.testing.assert_allclose(cov, np.eye(2), atol=0.08)
    assert bw >= 0
    cov_fixed, bw_fixed = hac_covariance(y, "bartlett", 3.0)
    assert bw_fixed == 3.0
    with pytest.raises(ValueError):
        hac_covariance(y, "triangle", 2.0)


def test_hac_captures_autocorrelation():
    rng = np.random.default_rng(4)
    e = rng.standard_normal(20_000)
    ar = np.empty_like(e)
    ar[0] = e[0]
    for t in range(1, e.size):
        ar[t] = 0.5 * ar[t - 1] + e[t]
    cov, _ = hac_covariance((ar - ar.mean())[:, None])
    # long-run variance of AR(1): 1 / (1 - rho)^2 = 4
    assert cov[0, 0] == pytest.approx(4.0, rel=0.15)


def test_pairwise_matrix_layout():
    r = np.random.default_rng(5).normal(0.0005, 0.01, (300, 3))
    m = pairwise_test_matrix(r, ["A", "B", "C"])
    assert np.all(np.isnan(np.triu(m.p_values_sr, 0) + np.tril(np.ones((3, 3)), -1) * 0)[np.triu_indices(3)])
    assert np.all(np.isfinite(m.p_values_sr[np.tril_indices(3, -1)]))
    assert np.all(np.isfinite(m.p_values_ceq[np.triu_indices(3, 1)]))
    comb = m.combined()
    assert np.all(np.isnan(np.diag(comb)))
    assert np.all((comb[~np.eye(3, dtype=bool)] >= 0) & (comb[~np.eye(3, dtype=bool)] <= 1))


def test_significance_tiers():
    assert [significance_tier(p) for p in (0.001, 0.02, 0.07, 0.5, math.nan)] == ["***", "**", "*", "", ""]


def test_spanning_exact():
    x = np.random.default_rng(6).normal(0, 0.01, (200, 3))
    res = spanning_tests(x, x[:, 1])
    assert (res.f_hk, res.f1, res.f2) == (0.0, 0.0, 0.0)
    assert (res.p_hk, res.p1, res.p2) == (1.0, 1.0, 1.0)
    assert not res.rejects()
    mix = x @ np.array([0.2, 0.5, 0.3])
    res = spanning_tests(x, mix)
    assert res.f_hk < 1e-10 and res.beta_sum == pytest.approx(1)


def test_spanning_alpha_detected():
    rng = np.random.default_rng(7)
    x = rng.normal(0, 0.01, (500, 3))
    y = x @ [0.3, 0.3, 0.4] + 0.01 + rng.normal(0, 0.002, 500)
    res = spanning_tests(x, y)
    assert res.p1 < 0.01 and res.rejects(0.1)


def test_spanning_f2_consistency():
    # independent candidate with a different variance: the GMV test gains power with T
    rejections = {}
    for t in (50, 1000):
        hits = 0
        for rep in range(100):
            rng = np.random.default_rng([8, t, rep])
            x = rng.normal(0, 0.01, (t, 2))
            y = rng.normal(0, 0.03, t)
            hits += spanning_tests(x, y).p2 < 0.05
        rejections[t] = hits
    assert rejections[1000] > rejections[50]
    assert rejections[1000] >= 90 and rejections[50] < 60


def test_spanning_errors():
    rng = np.random.default_rng(9)
    with pytest.raises(DataError):
        spanning_tests(rng.normal(size=(4, 2)), rng.normal(size=4))
    x = rng.normal(size=(50, 2))
    with pytest.raises(DataError, match="rank"):
        spanning_tests(np.column_stack([x[:, 0], x[:, 0]]), x[:, 1])


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 4))
def test_spanning_invariant_to_benchmark_remixing(seed, k):
    rng = np.random.default_rng(seed)
    x = rng.normal(0, 0.01, (120, k))
    y = rng.normal(0.001, 0.012, 120) + 0.3 * x[:, 0]
    # mixing matrix whose columns sum to one keeps the span and the unit-sum constraint
    m = rng.uniform(0.1, 1.0, (k, k)) + np.eye(k)
    m /= m.sum(axis=0)
    a, b = spanning_tests(x, y), spanning_tests(x @ m, y)
    for f in ("f_hk", "f1", "f2"):
        assert getattr(b, f) == pytest.approx(getattr(a, f), rel=1e-8, abs=1e-10)
