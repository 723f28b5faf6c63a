"""Long-only allocation rules over the (optionally capped) simplex.

Every solver returns a plain ``numpy`` weight vector that is non-negative,
sums to one and respects the per-asset caps.  ``caps`` may be ``None``, an
array of upper bounds, or any object with a ``caps`` attribute (such as
:class:`allocbench.liquidity.BoundsSpec`).
"""

from __future__ import annotations

import math
import warnings
from typing import Callable

import numpy as np
from scipy.optimize import brentq, linprog, minimize

from . import _simplex
from ._qp import solve_qp
from .estimation import MomentEstimates, empirical_var_cvar, estimate_moments, tail_size
from .exceptions import ConvergenceError, InfeasibleError, NoPositiveReturnError, NumericalWarning

__all__ = [
    "STRATEGIES",
    "pdi",
    "solve_ew",
    "solve_erc",
    "solve_max_pdi",
    "solve_max_return",
    "solve_max_sharpe",
    "solve_min_cvar",
    "solve_min_var",
    "solve_strategy",
]


# --------------------------------------------------------------------------
# equal weights, maximum return
# --------------------------------------------------------------------------


def solve_ew(n: int, caps=None) -> np.ndarray:
    """Equal weights; under caps the excess is water-filled onto uncapped assets."""
    if n < 1:
        raise ValueError("need at least one asset")
    if caps is None:
        return np.full(n, 1.0 / n)
    return _simplex.water_fill(_simplex.resolve_caps(caps, n))


def solve_max_return(est: MomentEstimates, caps=None) -> np.ndarray:
    """All weight on the highest in-sample mean (greedy fill under caps).

    Ties go to the lowest asset index.
    """
    n = est.n_assets
    return _simplex.greedy_fill(est.mu, _simplex.resolve_caps(caps, n))


# --------------------------------------------------------------------------
# mean-variance
# --------------------------------------------------------------------------


def _min_var_qp(sigma_mat, caps, mu=None, target=None, x0=None):
    n = sigma_mat.shape[0]
    if mu is None:
        A, b = np.ones((1, n)), np.array([1.0])
    else:
        A, b = np.vstack([np.ones(n), mu]), np.array([1.0, target])
    return solve_qp(2.0 * sigma_mat, np.zeros(n), A, b, np.zeros(n), caps, x0=x0)


def solve_min_var(est: MomentEstimates, caps=None, *, x0=None) -> np.ndarray:
    """Global minimum-variance portfolio on the (capped) simplex.

    ``x0`` is an optional starting guess (any vector; it is projected onto
    the feasible set).  It affects only the solver's path.
    """
    n = est.n_assets
    caps = _simplex.resolve_caps(caps, n)
    if n == 1:
        return np.ones(1)
    start = _simplex.water_fill(caps) if x0 is None else _simplex.project(np.asarray(x0, dtype=float), caps)
    w = _min_var_qp(est.sigma_mat, caps, x0=start)
    return _simplex.clean(w, caps)


def frontier_point(est: MomentEstimates, target: float, caps: np.ndarray) -> np.ndarray:
    """Minimum-variance weights with expected return ``target`` (must be attainable)."""
    lo = _simplex.greedy_fill(-est.mu, caps)
    hi = _simplex.greedy_fill(est.mu, caps)
    r_lo, r_hi = float(lo @ est.mu), float(hi @ est.mu)
    if not r_lo - 1e-15 <= target <= r_hi + 1e-15:
        raise InfeasibleError(f"target return {target:.6g} outside [{r_lo:.6g}, {r_hi:.6g}]")
    # mixing the two extreme vertices gives a feasible starting point
    t = 0.0 if r_hi == r_lo else min(max((target - r_lo) / (r_hi - r_lo), 0.0), 1.0)
    x0 = (1 - t) * lo + t * hi
    w = _min_var_qp(est.sigma_mat, caps, mu=est.mu, target=target, x0=x0)
    return np.clip(w, 0.0, caps)


def _sharpe(w, est):
    var = float(w @ est.sigma_mat @ w)
    ret = float(w @ est.mu)
    if var <= 0:
        return math.inf if ret > 0 else -math.inf
    return ret / math.sqrt(var)


def solve_max_sharpe(est: MomentEstimates, caps=None, *, x0=None) -> np.ndarray:
    """Long-only tangency portfolio with a zero riskless rate.

    Solved exactly through the homogenised QP::

        min y'Sigma y  s.t.  mu'y = 1,  y >= 0,  y_i <= c_i * sum(y)

    with ``w = y / sum(y)``.  The cap rows are written as equalities with
    non-negative slacks and dropped entirely when no cap is below one.
    ``x0`` is an optional starting portfolio for the QP; it is used only if
    it is feasible with positive expected return.

    Raises
    ------
    NoPositiveReturnError
        If no feasible portfolio has a positive expected return.
    """
    n = est.n_assets
    mu = est.mu
    caps_arr = _simplex.resolve_caps(caps, n)
    if not np.any(mu > 0):
        raise NoPositiveReturnError("all mean returns are non-positive; tangency portfolio undefined")
    if n == 1:
        return np.ones(1)
    w0 = _simplex.greedy_fill(mu, caps_arr)
    r0 = float(w0 @ mu)
    if r0 <= 0:
        raise NoPositiveReturnError("no capped portfolio has a positive expected return")
    if x0 is not None:
        w1 = _simplex.project(np.asarray(x0, dtype=float), caps_arr)
        if float(w1 @ mu) > 0:
            w0, r0 = w1, float(w1 @ mu)
    y0 = w0 / r0
    capped = np.flatnonzero(caps_arr < 1.0)
    if capped.size == 0:
        y = solve_qp(
            2.0 * est.sigma_mat, np.zeros(n), mu[None, :], np.array([1.0]), np.zeros(n), np.full(n, np.inf), x0=y0
        )
    else:
        nc = capped.size
        q = np.zeros((n + nc, n + nc))
        q[:n, :n] = 2.0 * est.sigma_mat
        a = np.zeros((1 + nc, n + nc))
        a[0, :n] = mu
        a[1:, :n] = -caps_arr[capped][:, None]
        a[1 + np.arange(nc), capped] += 1.0
        a[1:, n:] = np.eye(nc)
        x0 = np.concatenate([y0, caps_arr[capped] * y0.sum() - y0[capped]])
        x = solve_qp(
            q, np.zeros(n + nc), a, np.concatenate([[1.0], np.zeros(nc)]),
            np.zeros(n + nc), np.full(n + nc, np.inf), x0=np.clip(x0, 0.0, None),
        )
        y = x[:n]
    y = np.clip(y, 0.0, None)
    return _simplex.clean(y / y.sum(), caps_arr)


# --------------------------------------------------------------------------
# minimum CVaR (scenario LP)
# --------------------------------------------------------------------------


def cvar_lp(window, alpha: float, caps: np.ndarray, target: float | None = None):
    """Scenario LP for the minimum-CVaR portfolio.

    The primal problem minimises ``zeta + (1/m) * sum_s max(0, -w'x_s - zeta)``
    over the capped simplex, with ``m = ceil(alpha * K)`` so the optimum equals
    the empirical CVaR (mean loss over the ``m`` worst scenarios).  With
    ``target`` the constraint ``w'mu = target`` is added (CVaR frontier).

    The dual is solved instead, since it has N constraints rather than K::

        max  nu + eta * target - caps's
        s.t. (X'p)_i + nu + eta * mu_i - s_i <= 0,   sum(p) = 1,
             0 <= p <= 1/m,  s >= 0

    and the weights are read off its inequality multipliers.

    Returns
    -------
    (weights, optimal CVaR)
    """
    x = np.asarray(window, dtype=float)
    k, n = x.shape
    m = tail_size(k, alpha)
    with_target = target is not None
    # variables: p (k), nu, [eta], s (n)
    n_free = 2 if with_target else 1
    c = np.concatenate([np.zeros(k), [-1.0], [-target] if with_target else [], caps])
    a_ub = np.hstack(
        [x.T, np.ones((n, 1)), x.mean(axis=0)[:, None] if with_target else np.zeros((n, 0)), -np.eye(n)]
    )
    a_eq = np.concatenate([np.ones(k), np.zeros(n_free + n)])[None, :]
    bounds = np.empty((k + n_free + n, 2))
    bounds[:k] = (0.0, 1.0 / m)
    bounds[k : k + n_free] = (-np.inf, np.inf)
    bounds[k + n_free :] = (0.0, np.inf)
    res = linprog(
        c,
        A_ub=a_ub,
        b_ub=np.zeros(n),
        A_eq=a_eq,
        b_eq=[1.0],
        bounds=bounds,
        method="highs-ds",
        options={"presolve": False, "primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise InfeasibleError(f"CVaR LP failed: {res.message}")
    return -res.ineqlin.marginals, float(-res.fun)


def solve_min_cvar(window, alpha: float = 0.05, caps=None) -> np.ndarray:
    """Minimum empirical-CVaR portfolio over the window's rows as scenarios.

    A window whose rows are all identical has a flat (or linear) objective;
    the equal-weight solution is returned with a warning.
    """
    x = np.asarray(window, dtype=float)
    k, n = x.shape
    caps_arr = _simplex.resolve_caps(caps, n)
    if n == 1:
        return np.ones(1)
    if np.all(x == x[0]):
        warnings.warn("degenerate CVaR window (identical scenarios); using equal weights", NumericalWarning, stacklevel=2)
        return solve_ew(n, caps)
    w, _ = cvar_lp(x, alpha, caps_arr)
    return _simplex.clean(w, caps_arr)


# --------------------------------------------------------------------------
# equal risk contribution
# --------------------------------------------------------------------------


def _erc_budget_solve(S, h, b, y0, max_iter, tol):
    """Solve ``y_i (S y + h)_i = b`` for y > 0.

    These are the stationarity conditions of the strictly convex
    ``0.5 y'Sy + h'y - b sum(log y)``.  A few cyclical coordinate-descent
    sweeps bring y close; damped Newton steps with backtracking on that
    objective finish the job.
    """
    y = y0.copy()
    diag = np.diag(S)
    for sweep in range(max_iter):
        for i in range(y.size):
            a = S[i] @ y - diag[i] * y[i] + h[i]
            y[i] = (-a + math.sqrt(a * a + 4.0 * diag[i] * b)) / (2.0 * diag[i])
        rc = y * (S @ y + h)
        if np.max(np.abs(rc - b)) <= 1e-2 * b or sweep == max_iter - 1:
            break

    def objective(v):
        return 0.5 * v @ S @ v + h @ v - b * np.log(v).sum()

    f = objective(y)
    for _ in range(200):
        sy = S @ y + h
        if np.max(np.abs(y * sy - b)) <= tol * b:
            return y
        g = sy - b / y
        step = np.linalg.solve(S + np.diag(b / y**2), -g)
        t = 1.0
        while np.any(y + t * step <= 0):
            t *= 0.5
        while True:
            y_new = y + t * step
            f_new = objective(y_new)
            # allow for rounding once f is flat to machine precision
            if f_new <= f + 1e-4 * t * (g @ step) + 1e-14 * abs(f) or t < 1e-12:
                break
            t *= 0.5
        if t < 1e-12:
            break
        y, f = y_new, f_new
    if np.max(np.abs(y * (S @ y + h) - b)) > 1e-6 * b:
        raise ConvergenceError("ERC iteration did not converge", last_iterate=y)
    return y


def solve_erc(est: MomentEstimates, caps=None, *, max_iter: int = 10_000, tol: float = 1e-12) -> np.ndarray:
    """Equal-risk-contribution (risk-parity) portfolio.

    Uncapped, every asset's contribution ``w_i (Sigma w)_i`` is equal.  With
    binding caps those assets sit at their cap and the remaining weight is
    re-equalised across the uncapped assets.
    """
    n = est.n_assets
    caps_arr = _simplex.resolve_caps(caps, n)
    S = np.array(est.sigma_mat, dtype=float)
    if n == 1:
        return np.ones(1)
    tr = np.trace(S)
    if tr <= 0:
        # every portfolio has zero risk, so all contributions are equal
        warnings.warn("zero covariance in ERC; using equal weights", NumericalWarning, stacklevel=2)
        return solve_ew(n, caps_arr)
    evals = np.linalg.eigvalsh(S)
    if evals[0] <= 1e-12 * evals[-1]:
        warnings.warn("singular covariance in ERC; adding a small ridge", NumericalWarning, stacklevel=2)
        S = S + 1e-10 * tr / n * np.eye(n)

    capped = np.zeros(n, dtype=bool)
    for _ in range(n + 1):
        free = ~capped
        w = np.zeros(n)
        w[capped] = caps_arr[capped]
        budget = 1.0 - w.sum()
        F = np.flatnonzero(free)
        S_ff = S[np.ix_(F, F)]
        h = S[np.ix_(F, np.flatnonzero(capped))] @ w[capped]
        y0 = 1.0 / np.sqrt(np.diag(S_ff))
        if not capped.any():
            # scale the inverse-vol start so that the contributions sum to n * budget
            y0 *= math.sqrt(1.0 / (y0 @ S_ff @ y0))
            y = _erc_budget_solve(S_ff, h, 1.0 / n, y0, max_iter, tol)
            if np.all(y == y[0]):
                return solve_ew(n)
            y = y / y.sum()
        else:
            y0 *= budget / y0.sum()

            def excess(log_b):
                yb = _erc_budget_solve(S_ff, h, math.exp(log_b), y0, max_iter, tol)
                return yb.sum() - budget

            base = math.log(max(y0 @ (S_ff @ y0 + h) / F.size, 1e-300))
            lo, hi = base - 1.0, base + 1.0
            while excess(lo) > 0:
                lo -= 2.0
            while excess(hi) < 0:
                hi += 2.0
            log_b = brentq(excess, lo, hi, xtol=1e-14, rtol=1e-15, maxiter=500)
            y = _erc_budget_solve(S_ff, h, math.exp(log_b), y0, max_iter, tol)
            y *= budget / y.sum()
        w[F] = y
        over = free & (w > caps_arr * (1 + 1e-12))
        rc = w * (S @ w)
        level = rc[free].mean()
        release = capped & (rc > level * (1 + 1e-9))
        if not over.any() and not release.any():
            return _simplex.clean(w, caps_arr)
        capped = (capped | over) & ~release
    raise ConvergenceError("ERC cap re-equalisation did not settle", last_iterate=w)


# --------------------------------------------------------------------------
# maximum diversification (portfolio diversification index)
# --------------------------------------------------------------------------


def pdi_from_eigenvalues(evals) -> float:
    """``2 * sum_i i * W_i - 1`` over normalised eigenvalues sorted descending."""
    lam = np.sort(np.clip(np.asarray(evals, dtype=float), 0.0, None))[::-1]
    total = lam.sum()
    if total <= 0:
        raise ValueError("PDI undefined for a zero covariance matrix")
    ranks = np.arange(1, lam.size + 1)
    return float(2.0 * (ranks @ lam) / total - 1.0)


def pdi(w, sigma_mat) -> float:
    """PDI of the covariance of weighted returns, ``diag(w) Sigma diag(w)``."""
    w = np.asarray(w, dtype=float)
    m = sigma_mat * np.outer(w, w)
    return pdi_from_eigenvalues(np.linalg.eigvalsh(m))


def _pdi_value_grad(w, S):
    m = S * np.outer(w, w)
    lam, V = np.linalg.eigh(m)
    lam = np.clip(lam, 0.0, None)
    total = lam.sum()
    n = w.size
    if not total > 0:
        # w = 0 (a line-search probe): report a value below the minimum of 1
        return 0.0, np.zeros(n)
    ranks = np.arange(n, 0, -1)  # eigh is ascending; descending rank of each
    weighted = ranks @ lam
    value = 2.0 * weighted / total - 1.0
    # d lambda_k / d w_j = 2 V_jk (S diag(w) V)_jk
    dlam = 2.0 * V * (S @ (w[:, None] * V))
    dtotal = 2.0 * w * np.diag(S)
    grad = 2.0 * (dlam @ ranks) / total - 2.0 * weighted / total**2 * dtotal
    return value, grad


def _pdi_ascent(w, S, caps, max_iter, gtol):
    f, g = _pdi_value_grad(w, S)
    step = 1.0 / max(np.linalg.norm(g), 1e-12)
    for _ in range(max_iter):
        while True:
            w_new = _simplex.project(w + step * g, caps)
            f_new, g_new = _pdi_value_grad(w_new, S)
            delta = w_new - w
            if f_new >= f + 1e-4 * (g @ delta) or np.abs(delta).max() < 1e-15:
                break
            step *= 0.5
        moved = np.abs(delta).max()
        improved = f_new - f
        w, f, g = w_new, f_new, g_new
        if moved < gtol or (0 <= improved < 1e-15):
            break
        step *= 2.0
    return w, f


def _pdi_orthant(w0, S, max_iter, gtol, ftol):
    # PDI is invariant to the scale of w, so the simplex constraint can be
    # dropped in favour of plain bounds v >= 0 and the result renormalised
    def neg(v):
        f, g = _pdi_value_grad(v, S)
        return -f, -g

    res = minimize(
        neg,
        w0,
        jac=True,
        method="L-BFGS-B",
        bounds=[(0.0, None)] * w0.size,
        options={"maxiter": max_iter, "gtol": gtol, "ftol": ftol},
    )
    v = np.clip(res.x, 0.0, None)
    if v.sum() <= 0:
        return w0, _pdi_value_grad(w0, S)[0]
    w = v / v.sum()
    return w, _pdi_value_grad(w, S)[0]


def _pdi_local(w0, S, caps, max_iter, gtol, ftol):
    w, f = _pdi_orthant(w0, S, max_iter, gtol, ftol)
    if np.any(w > caps + 1e-12):
        # caps bind: continue on the capped simplex from the projection
        w, f = _pdi_ascent(_simplex.project(w, caps), S, caps, max_iter, gtol)
        w2, f2 = _pdi_ascent(w0, S, caps, max_iter, gtol)
        if f2 > f:
            w, f = w2, f2
    return w, f


def solve_max_pdi(
    window_or_cov,
    caps=None,
    seed: int = 0,
    *,
    restarts: int = 10,
    max_iter: int = 500,
    gtol: float = 1e-8,
    ftol: float = 1e-12,
    init=None,
) -> np.ndarray:
    """Weights maximising the PDI of the weighted-return covariance.

    Multi-start local ascent.  Each start runs L-BFGS-B over the positive
    orthant (PDI does not depend on the scale of ``w``); if the result breaks
    a cap, projected gradient ascent on the capped simplex takes over.
    Starts are ``init`` (if given), equal weights, inverse volatility and
    seeded Dirichlet draws, ``restarts`` in total; the best optimum wins.

    Parameters
    ----------
    window_or_cov : ndarray or MomentEstimates
        A K x N return window, or precomputed moments.
    """
    if isinstance(window_or_cov, MomentEstimates):
        S = np.array(window_or_cov.sigma_mat)
    else:
        S = np.array(estimate_moments(window_or_cov).sigma_mat)
    n = S.shape[0]
    caps_arr = _simplex.resolve_caps(caps, n)
    if n == 1:
        return np.ones(1)
    if np.trace(S) <= 0:
        warnings.warn("zero covariance in MD (PDI undefined); using equal weights", NumericalWarning, stacklevel=2)
        return solve_ew(n, caps_arr)
    vols = np.sqrt(np.clip(np.diag(S), 0.0, None))
    starts = [_simplex.water_fill(caps_arr)]
    if np.all(vols > 0):
        starts.append(_simplex.project((1 / vols) / (1 / vols).sum(), caps_arr))
    if init is not None:
        starts.insert(0, _simplex.project(np.asarray(init, dtype=float), caps_arr))
    rng = np.random.default_rng(seed)
    while len(starts) < max(restarts, 1):
        starts.append(_simplex.project(rng.dirichlet(np.ones(n)), caps_arr))
    best_w, best_f = None, -np.inf
    for w0 in starts[: max(restarts, 1)]:
        w, f = _pdi_local(w0, S, caps_arr, max_iter, gtol, ftol)
        if f > best_f + 1e-14:
            best_w, best_f = w, f
    return _simplex.clean(best_w, caps_arr)


# --------------------------------------------------------------------------
# registry
# --------------------------------------------------------------------------

STRATEGIES = ("EW", "MinVar", "MV-S", "RR-MaxRet", "MinCVaR", "ERC", "MD")


def solve_strategy(
    name: str,
    window,
    est: MomentEstimates | None = None,
    caps=None,
    *,
    alpha: float = 0.05,
    seed: int = 0,
    init=None,
    md_restarts: int = 10,
    md_gtol: float = 1e-8,
    md_ftol: float = 1e-12,
) -> np.ndarray:
    """Dispatch to the solver for strategy ``name`` on one estimation window.

    ``init`` is a starting portfolio.  For MinVar and MV-S (convex problems)
    it only speeds up the solver; for MD it is the first local-search start.
    """
    window = np.asarray(window, dtype=float)
    if est is None and name not in ("EW", "MinCVaR"):
        est = estimate_moments(window)
    if name == "EW":
        return solve_ew(window.shape[1], caps)
    if name == "MinVar":
        return solve_min_var(est, caps, x0=init)
    if name == "MV-S":
        return solve_max_sharpe(est, caps, x0=init)
    if name == "RR-MaxRet":
        return solve_max_return(est, caps)
    if name == "MinCVaR":
        return solve_min_cvar(window, alpha, caps)
    if name == "ERC":
        return solve_erc(est, caps)
    if name == "MD":
        return solve_max_pdi(est, caps, seed, restarts=md_restarts, init=init, gtol=md_gtol, ftol=md_ftol)
    raise KeyError(f"unknown strategy {name!r}; known: {STRATEGIES}")


WARM_STARTABLE = ("MinVar", "MV-S", "MD")


def make_solver(
    name: str,
    *,
    md_warm_restarts: int = 1,
    md_warm_gtol: float = 1e-6,
    md_warm_ftol: float = 1e-10,
    **kwargs,
) -> Callable:
    """A ``solver(window, est, caps, init=None, seed=None)`` closure for ``name``.

    Solvers of MinVar, MV-S and MD are marked ``warm_start``.  Given
    ``init`` (a nearby solution, such as the weights on the un-resampled
    window) MinVar and MV-S start their QP there, and MD runs only
    ``md_warm_restarts`` local searches from ``init`` with the looser
    ``md_warm_*`` tolerances.
    """
    if name not in STRATEGIES:
        raise KeyError(f"unknown strategy {name!r}; known: {STRATEGIES}")

    def solver(window, est=None, caps=None, init=None, seed=None):
        kw = dict(kwargs)
        if seed is not None:
            kw["seed"] = seed
        if init is not None and name in WARM_STARTABLE:
            kw["init"] = init
            if name == "MD":
                kw.update(md_restarts=md_warm_restarts, md_gtol=md_warm_gtol, md_ftol=md_warm_ftol)
        return solve_strategy(name, window, est, caps, **kw)

    solver.__name__ = f"solve_{name}"
    solver.strategy = name
    solver.warm_start = name in WARM_STARTABLE
    return solver


def cvar_of(w, window, alpha: float = 0.05) -> float:
    """Empirical CVaR of the portfolio ``w`` over the window's scenarios."""
    return empirical_var_cvar(np.asarray(window) @ w, alpha)[1]
