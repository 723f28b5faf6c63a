import math
import warnings

import numpy as np
import pytest
from hypothesis import assume, example, given, settings
from hypothesis import strategies as st

from allocbench import _simplex
from allocbench.estimation import MomentEstimates, empirical_var_cvar, estimate_moments, risk_contributions
from allocbench.exceptions import InfeasibleError, NoPositiveReturnError, NumericalWarning
from allocbench.strategies import (
    STRATEGIES,
    cvar_lp,
    cvar_of,
    make_solver,
    pdi,
    pdi_from_eigenvalues,
    solve_erc,
    solve_ew,
    solve_max_pdi,
    solve_max_return,
    solve_max_sharpe,
    solve_min_cvar,
    solve_min_var,
    solve_strategy,
)

from conftest import grid_simplex, random_cov


def est_of(mu, sigma):
    return MomentEstimates.from_arrays(mu, sigma)


def assert_feasible(w, caps=None, tol=1e-8):
    w = np.asarray(w)
    assert np.all(w >= -tol)
    assert abs(w.sum() - 1) <= tol
    if caps is not None:
        assert np.all(w <= np.asarray(caps) + tol)


# --------------------------------------------------------------------------
# EW and max return
# --------------------------------------------------------------------------


def test_ew_examples():
    np.testing.assert_array_equal(solve_ew(4), [0.25] * 4)
    np.testing.assert_array_equal(solve_ew(1), [1.0])
    np.testing.assert_allclose(solve_ew(3, [0.1, 1, 1]), [0.1, 0.45, 0.45], atol=1e-15)
    with pytest.raises(InfeasibleError):
        solve_ew(3, [0.1, 0.1, 0.1])


def test_max_return_examples():
    s = np.eye(3)
    np.testing.assert_array_equal(solve_max_return(est_of([0.01, 0.03, 0.02], s)), [0, 1, 0])
    np.testing.assert_array_equal(solve_max_return(est_of([0.03, 0.03], np.eye(2))), [1, 0])
    np.testing.assert_allclose(solve_max_return(est_of([0.03, 0.02, 0.01], s), [0.5, 0.3, 1]), [0.5, 0.3, 0.2])


# --------------------------------------------------------------------------
# mean-variance
# --------------------------------------------------------------------------


def test_min_var_examples():
    np.testing.assert_allclose(solve_min_var(est_of([0, 0], np.diag([1.0, 4.0]))), [0.8, 0.2], atol=1e-9)
    np.testing.assert_allclose(solve_min_var(est_of([0, 0, 0], np.eye(3))), [1 / 3] * 3, atol=1e-12)
    np.testing.assert_allclose(solve_min_var(est_of([0, 0], np.diag([1.0, 4.0])), [0.6, 1]), [0.6, 0.4], atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 8), st.floats(0.01, 100))
def test_min_var_scale_invariance(seed, n, c):
    rng = np.random.default_rng(seed)
    s = random_cov(rng, n)
    w1 = solve_min_var(est_of(np.zeros(n), s))
    w2 = solve_min_var(est_of(np.zeros(n), c * s))
    np.testing.assert_allclose(w1, w2, atol=1e-6)


def test_max_sharpe_examples():
    np.testing.assert_allclose(solve_max_sharpe(est_of([0.1, 0.2], np.diag([0.04, 0.04]))), [1 / 3, 2 / 3], atol=1e-9)
    np.testing.assert_allclose(solve_max_sharpe(est_of([0.1, 0.1], np.eye(2))), [0.5, 0.5], atol=1e-9)
    with pytest.raises(NoPositiveReturnError):
        solve_max_sharpe(est_of([-0.1, 0.0], np.eye(2)))
    np.testing.assert_array_equal(solve_max_sharpe(est_of([0.1], [[0.04]])), [1.0])


def test_max_sharpe_capped_no_positive_return():
    # the only positive-mean asset is capped below one and the rest are negative
    with pytest.raises(NoPositiveReturnError):
        solve_max_sharpe(est_of([0.1, -0.5], np.eye(2)), [0.1, 1.0])


def _sharpe(w, mu, s):
    return (w @ mu) / math.sqrt(w @ s @ w)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 6))
def test_max_sharpe_beats_random_portfolios(seed, n):
    rng = np.random.default_rng(seed)
    s = random_cov(rng, n)
    mu = rng.normal(0.0005, 0.001, n)
    if not np.any(mu > 0):
        mu[0] = 0.001
    caps = np.minimum(1.0, rng.uniform(0.3, 1.5, n))
    if caps.sum() < 1:
        caps = None
    assume(_simplex.greedy_fill(mu, _simplex.resolve_caps(caps, n)) @ mu > 0)
    w = solve_max_sharpe(est_of(mu, s), caps)
    assert_feasible(w, caps)
    best = _sharpe(w, mu, s)
    c = _simplex.resolve_caps(caps, n)
    for v in rng.dirichlet(np.ones(n), 300):
        v = _simplex.project(v, c)
        if v @ mu > 0:
            assert _sharpe(v, mu, s) <= best + 1e-9 * abs(best)


# --------------------------------------------------------------------------
# CVaR
# --------------------------------------------------------------------------


def test_min_cvar_examples():
    a = [-0.10, 0.02, 0.02, 0.02]
    b = [0.02, -0.10, 0.02, 0.02]
    x = np.column_stack([a, b])
    np.testing.assert_allclose(solve_min_cvar(x, 0.25), [0.5, 0.5], atol=1e-9)
    # B dominates A scenario by scenario
    x2 = np.column_stack([a, np.array(a) + 0.01])
    np.testing.assert_allclose(solve_min_cvar(x2, 0.25), [0, 1], atol=1e-9)
    one = np.array(a)[:, None]
    np.testing.assert_array_equal(solve_min_cvar(one, 0.25), [1.0])
    assert cvar_of(np.ones(1), one, 0.25) == pytest.approx(0.10)


def test_min_cvar_degenerate_window():
    x = np.tile([0.01, 0.02, -0.01], (30, 1))
    with pytest.warns(NumericalWarning, match="degenerate"):
        w = solve_min_cvar(x, 0.05)
    np.testing.assert_allclose(w, [1 / 3] * 3)


@settings(max_examples=60, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 8), st.sampled_from([0.01, 0.05, 0.1, 0.25]))
def test_cvar_lp_value_is_empirical_cvar(seed, n, alpha):
    rng = np.random.default_rng(seed)
    x = rng.standard_t(4, (120, n)) * 0.02 + rng.normal(0, 0.001, n)
    w, value = cvar_lp(x, alpha, np.ones(n))
    w = np.clip(w, 0, None)
    w /= w.sum()
    assert value == pytest.approx(empirical_var_cvar(x @ w, alpha)[1], abs=1e-8)
    for v in rng.dirichlet(np.ones(n), 100):
        assert empirical_var_cvar(x @ v, alpha)[1] >= value - 1e-10


def test_cvar_lp_infeasible_target():
    x = np.random.default_rng(0).normal(size=(50, 3))
    with pytest.raises(InfeasibleError):
        cvar_lp(x, 0.05, np.ones(3), target=10.0)


# --------------------------------------------------------------------------
# ERC
# --------------------------------------------------------------------------


def test_erc_examples():
    np.testing.assert_array_equal(solve_erc(est_of(np.zeros(5), np.eye(5))), [0.2] * 5)
    np.testing.assert_allclose(solve_erc(est_of([0, 0], np.diag([1.0, 4.0]))), [2 / 3, 1 / 3], atol=1e-12)


def rc_spread(w, s):
    rc = risk_contributions(w, s)
    return (rc.max() - rc.min()) / rc.mean()


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 10))
def test_erc_equal_contributions(seed, n):
    s = random_cov(np.random.default_rng(seed), n)
    w = solve_erc(est_of(np.zeros(n), s))
    assert_feasible(w)
    assert rc_spread(w, s) < 1e-6


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 8))
def test_erc_with_caps(seed, n):
    rng = np.random.default_rng(seed)
    s = random_cov(rng, n)
    free_w = solve_erc(est_of(np.zeros(n), s))
    caps = np.ones(n)
    caps[np.argmax(free_w)] = 0.8 * free_w.max()
    w = solve_erc(est_of(np.zeros(n), s), caps)
    assert_feasible(w, caps)
    free = w < caps - 1e-9
    rc = w * (s @ w)
    assert np.ptp(rc[free]) / rc[free].mean() < 1e-6


def test_erc_singular_covariance_warns():
    s = np.array([[1.0, 1.0, 0.0], [1.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
    with pytest.warns(NumericalWarning, match="ridge"):
        w = solve_erc(est_of(np.zeros(3), s))
    assert_feasible(w)


# --------------------------------------------------------------------------
# MD / PDI
# --------------------------------------------------------------------------


def test_pdi_values():
    assert pdi([0.5, 0.5], np.eye(2)) == pytest.approx(2.0)
    assert pdi_from_eigenvalues([1, 1, 1, 1]) == pytest.approx(4.0)
    assert pdi_from_eigenvalues([5, 0, 0]) == pytest.approx(1.0)
    ones = np.ones((3, 3))
    for w in ([1 / 3] * 3, [0.7, 0.2, 0.1]):
        assert pdi(w, ones) == pytest.approx(1.0, abs=1e-12)
    with pytest.raises(ValueError):
        pdi_from_eigenvalues([0, 0])


def test_max_pdi_examples():
    w = solve_max_pdi(est_of([0, 0], np.eye(2)))
    np.testing.assert_allclose(w, [0.5, 0.5], atol=1e-6)
    w = solve_max_pdi(est_of([0, 0], np.diag([1.0, 4.0])))
    np.testing.assert_allclose(w, [2 / 3, 1 / 3], atol=1e-5)
    assert pdi(w, np.diag([1.0, 4.0])) == pytest.approx(2.0, abs=1e-9)


def test_max_pdi_deterministic_given_seed():
    s = random_cov(np.random.default_rng(5), 6)
    a = solve_max_pdi(est_of(np.zeros(6), s), seed=11)
    b = solve_max_pdi(est_of(np.zeros(6), s), seed=11)
    assert a.tobytes() == b.tobytes()


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 6))
def test_max_pdi_beats_random_portfolios(seed, n):
    rng = np.random.default_rng(seed)
    s = random_cov(rng, n)
    caps = None if seed % 2 else np.full(n, max(1.0 / n + 0.1, 0.4))
    w = solve_max_pdi(est_of(np.zeros(n), s), caps)
    assert_feasible(w, caps)
    best = pdi(w, s)
    assert 1 - 1e-9 <= best <= n + 1e-6
    c = _simplex.resolve_caps(caps, n)
    for v in rng.dirichlet(np.ones(n), 200):
        assert pdi(_simplex.project(v, c), s) <= best + 1e-6


# --------------------------------------------------------------------------
# registry
# --------------------------------------------------------------------------


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 2**32 - 1), st.sampled_from(STRATEGIES))
@example(seed=13916, name="MV-S")  # both means negative
def test_every_strategy_returns_feasible_weights(seed, name):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(2, 8))
    x = rng.standard_t(4, (120, n)) * 0.02 + 0.001
    caps = np.minimum(1.0, rng.uniform(0.2, 1.0, n))
    if caps.sum() < 1:
        caps = caps / caps.sum()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", NumericalWarning)
        for c in (None, caps):
            try:
                w = solve_strategy(name, x, caps=c)
            except NoPositiveReturnError:
                # only legitimate when no feasible portfolio earns a positive mean
                assert name == "MV-S"
                est = estimate_moments(x)
                assert solve_max_return(est, c) @ est.mu <= 0
                continue
            assert_feasible(w, c)


def test_make_solver_warm_start_gives_same_convex_optimum():
    rng = np.random.default_rng(2)
    x = rng.normal(0.001, 0.02, (200, 5))
    est = estimate_moments(x)
    for name in ("MinVar", "MV-S"):
        solver = make_solver(name)
        assert solver.warm_start and solver.strategy == name
        cold = solver(x, est)
        warm = solver(x, est, init=np.full(5, 0.2))
        np.testing.assert_allclose(cold, warm, atol=1e-7)
    assert not make_solver("EW").warm_start
    with pytest.raises(KeyError):
        make_solver("nope")


def test_grid_helper_matches_min_var_n3():
    s = random_cov(np.random.default_rng(9), 3)
    grid = grid_simplex(3)
    best = min(v @ s @ v for v in grid)
    w = solve_min_var(est_of(np.zeros(3), s))
    assert w @ s @ w <= best + 1e-12
