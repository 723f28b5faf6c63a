"""Long-only efficient frontiers in mean-variance and mean-CVaR space."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import _simplex
from .estimation import MomentEstimates, estimate_moments
from .exceptions import InfeasibleError
from .strategies import cvar_lp, cvar_of, frontier_point, solve_min_cvar, solve_min_var

__all__ = ["Frontier", "trace_frontier"]

RISK_MEASURES = ("variance", "cvar")


@dataclass(frozen=True)
class Frontier:
    """Frontier points sorted by strictly increasing target return.

    Attributes
    ----------
    target_returns : (G,) ndarray
    risks : (G,) ndarray
        Portfolio variance or empirical CVaR (positive loss) at each target.
    weights : (G, N) ndarray
    risk_measure : {"variance", "cvar"}
    """

    target_returns: np.ndarray
    risks: np.ndarray
    weights: np.ndarray
    risk_measure: str

    def __len__(self):
        return self.target_returns.size

    @property
    def points(self):
        return list(zip(self.target_returns, self.risks, self.weights))

    @property
    def min_risk_index(self) -> int:
        return int(np.argmin(self.risks))


def trace_frontier(
    window,
    risk_measure: str = "variance",
    grid_size: int = 50,
    caps=None,
    *,
    alpha: float = 0.05,
    est: MomentEstimates | None = None,
) -> Frontier:
    """Minimum-risk portfolios over a grid of target returns.

    The grid runs from the lowest to the highest attainable mean return on
    the (capped) simplex, and the return of the minimum-risk portfolio is
    inserted so the frontier's turning point is always present.  Targets the
    solver cannot reach are left out.

    Parameters
    ----------
    window : (K, N) array_like
        Return window.  Needed for ``"cvar"``; for ``"variance"`` moments may
        be passed instead through ``est``.
    risk_measure : {"variance", "cvar"}
    grid_size : int
        Number of evenly spaced targets (at least 2).
    caps : optional per-asset upper bounds
    alpha : float
        CVaR tail level.
    """
    if risk_measure not in RISK_MEASURES:
        raise ValueError(f"risk_measure must be one of {RISK_MEASURES}, got {risk_measure!r}")
    if grid_size < 2:
        raise ValueError("grid_size must be at least 2")
    x = None if window is None else np.asarray(window, dtype=float)
    if est is None:
        if x is None:
            raise ValueError("need a return window or moment estimates")
        est = estimate_moments(x)
    if risk_measure == "cvar" and x is None:
        raise ValueError("the CVaR frontier needs the return window")
    n = est.n_assets
    mu = est.mu
    caps_arr = _simplex.resolve_caps(caps, n)

    def risk_of(w):
        return float(w @ est.sigma_mat @ w) if risk_measure == "variance" else cvar_of(w, x, alpha)

    if n == 1:
        w = np.ones(1)
        return Frontier(mu.copy(), np.array([risk_of(w)]), w[None, :], risk_measure)

    r_lo = float(_simplex.greedy_fill(-mu, caps_arr) @ mu)
    r_hi = float(_simplex.greedy_fill(mu, caps_arr) @ mu)
    if risk_measure == "variance":
        w_min = solve_min_var(est, caps_arr)
    else:
        w_min = solve_min_cvar(x, alpha, caps_arr)
    r_min = float(w_min @ mu)

    if r_hi - r_lo <= 1e-14 * max(abs(r_hi), 1e-300):
        return Frontier(np.array([r_min]), np.array([risk_of(w_min)]), w_min[None, :], risk_measure)

    grid = np.linspace(r_lo, r_hi, grid_size)
    gap = 1e-9 * (r_hi - r_lo)
    grid = np.sort(np.append(grid[np.abs(grid - r_min) > gap], min(max(r_min, r_lo), r_hi)))

    targets, risks, weights = [], [], []
    for r in grid:
        if abs(r - r_min) <= gap:
            w = w_min
        else:
            try:
                if risk_measure == "variance":
                    w = frontier_point(est, r, caps_arr)
                else:
                    w = np.clip(cvar_lp(x, alpha, caps_arr, target=r)[0], 0.0, caps_arr)
            except InfeasibleError:
                continue
        targets.append(r)
        risks.append(max(risk_of(w), 0.0))
        weights.append(w)
    return Frontier(np.array(targets), np.array(risks), np.array(weights), risk_measure)
