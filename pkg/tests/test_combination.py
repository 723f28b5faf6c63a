import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from allocbench.combination import (
    BootstrapConfig,
    auto_block_length,
    ceq_loss,
    combine_bootstrap,
    combine_naive,
    stationary_bootstrap,
    stationary_bootstrap_indices,
)
from allocbench.estimation import MomentEstimates
from allocbench.exceptions import AllocBenchError, ConfigError, DataError


def test_ceq_loss_examples():
    s = np.array([[0.0004, 0.0001], [0.0001, 0.0009]])
    w = np.array([0.3, 0.7])
    assert ceq_loss(w, MomentEstimates.from_arrays([0, 0], s), 2.0) == pytest.approx(-(w @ s @ w))
    assert ceq_loss(w, MomentEstimates.from_arrays([0.001, 0.002], np.zeros((2, 2)))) == pytest.approx(0.0017)
    est = MomentEstimates.from_arrays([0.002, 0.0], np.diag([0.0004, 0.0009]))
    assert ceq_loss([1, 0], est, 1.0) == pytest.approx(0.0018)


def test_combine_naive_examples():
    np.testing.assert_array_equal(combine_naive([[1, 0], [0, 1]]), [0.5, 0.5])
    np.testing.assert_array_equal(combine_naive([[0.2, 0.8]]), [0.2, 0.8])
    np.testing.assert_allclose(combine_naive([[0.6, 0.4], [0.2, 0.8], [0.4, 0.6]]), [0.4, 0.6])
    with pytest.raises(ValueError):
        combine_naive([0.5, 0.5])


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 6))
def test_combine_naive_identical_vectors(seed, m):
    w = np.random.default_rng(seed).dirichlet(np.ones(5))
    np.testing.assert_allclose(combine_naive([w] * m), w, rtol=1e-15)


def test_block_length_iid_vs_ar1():
    rng = np.random.default_rng(0)
    e = rng.standard_normal(10_000)
    ar = np.empty_like(e)
    ar[0] = e[0]
    for t in range(1, e.size):
        ar[t] = 0.9 * ar[t - 1] + e[t]
    b_iid = auto_block_length(e)
    assert 1 <= b_iid <= 3
    assert auto_block_length(ar) > b_iid
    assert auto_block_length(np.full(50, 0.01)) == 1.0
    with pytest.raises(DataError):
        auto_block_length(np.zeros(9))


def test_bootstrap_limits():
    x = np.arange(20.0)[:, None] * [1, -1]
    # infinite expected block: one wrapped block, a rotation of the rows
    y = stationary_bootstrap(x, np.inf, seed=3)
    shift = int(y[0, 0])
    np.testing.assert_array_equal(y, np.roll(x, -shift, axis=0))
    # rows are resampled jointly
    z = stationary_bootstrap(x, 1.0, seed=4)
    np.testing.assert_array_equal(z[:, 1], -z[:, 0])
    # block length 1 restarts at every step
    rng = np.random.default_rng(0)
    idx = stationary_bootstrap_indices(1000, 1.0, 1000, rng)
    assert np.mean(np.diff(idx) % 1000 == 1) < 0.01
    with pytest.raises(ValueError):
        stationary_bootstrap(x, 0.5)


def test_bootstrap_mean_unbiased():
    rng = np.random.default_rng(1)
    x = rng.standard_normal(200)
    means = np.array([stationary_bootstrap(x, 5.0, seed=np.random.SeedSequence([7, b])).mean() for b in range(10_000)])
    se = means.std() / np.sqrt(means.size)
    assert abs(means.mean() - x.mean()) < 3 * se


def test_bootstrap_determinism():
    x = np.random.default_rng(2).standard_normal((50, 3))
    a = stationary_bootstrap(x, 4.0, seed=9)
    b = stationary_bootstrap(x, 4.0, seed=9)
    assert a.tobytes() == b.tobytes()


def _fixed(w):
    def solver(window, est=None, caps=None):
        return np.asarray(w, dtype=float)

    return solver


def test_unanimous_and_tie():
    a = np.random.default_rng(0).normal(0.0, 0.01, 252)
    x = np.column_stack([a, a - 0.01])  # asset 0 beats asset 1 on every resample
    cfg = BootstrapConfig(B=50, seed=1)
    shares, w = combine_bootstrap([_fixed([1, 0]), _fixed([0, 1])], x, cfg)
    np.testing.assert_array_equal(shares.pi, [1, 0])
    np.testing.assert_array_equal(w, [1, 0])
    shares, w = combine_bootstrap([_fixed([0.3, 0.7]), _fixed([0.3, 0.7])], x, cfg)
    np.testing.assert_array_equal(shares.pi, [1, 0])
    np.testing.assert_array_equal(w, [0.3, 0.7])


def test_failing_models():
    x = np.random.default_rng(1).normal(0, 0.01, (100, 2))

    def broken(window, est=None, caps=None):
        raise AllocBenchError("boom")

    shares, w = combine_bootstrap([broken, _fixed([0.5, 0.5])], x, BootstrapConfig(B=10))
    np.testing.assert_array_equal(shares.pi, [0, 1])
    with pytest.raises(AllocBenchError):
        combine_bootstrap([broken, broken], x, BootstrapConfig(B=3))
    with pytest.raises(ValueError):
        combine_bootstrap([_fixed([1, 0])], x)


def test_config_validation():
    with pytest.raises(ConfigError):
        BootstrapConfig(B=0)
    with pytest.raises(ConfigError):
        BootstrapConfig(block=0.5)
    with pytest.raises(ConfigError):
        BootstrapConfig(block="long")
    assert BootstrapConfig(block="3").block == 3.0


@settings(max_examples=15, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_shares_sum_to_one_and_simplex(seed):
    rng = np.random.default_rng(seed)
    x = rng.normal(0.0005, 0.02, (120, 4))
    shares, w = combine_bootstrap(["EW", "MinVar", "RR-MaxRet"], x, BootstrapConfig(B=8, seed=seed))
    assert shares.pi.sum() == pytest.approx(1, abs=1e-10)
    assert np.all(shares.pi >= 0)
    assert np.all(w >= -1e-12) and w.sum() == pytest.approx(1)
