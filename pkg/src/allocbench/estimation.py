"""Per-window moment estimates, empirical VaR/CVaR and risk contributions."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .exceptions import DataError, NumericalWarning

PSD_EPS = 1e-10


@dataclass(frozen=True)
class MomentEstimates:
    """Sample mean vector, covariance matrix and per-asset volatilities."""

    mu: np.ndarray
    sigma_mat: np.ndarray
    vols: np.ndarray

    @property
    def n_assets(self) -> int:
        return self.mu.shape[0]

    @classmethod
    def from_arrays(cls, mu, sigma_mat) -> "MomentEstimates":
        mu = np.array(mu, dtype=float)
        s = np.array(sigma_mat, dtype=float)
        s = 0.5 * (s + s.T)
        vols = np.sqrt(np.clip(np.diag(s), 0.0, None))
        for a in (mu, s, vols):
            a.setflags(write=False)
        return cls(mu, s, vols)


def estimate_moments(window) -> MomentEstimates:
    """Column means and 1/(K-1) sample covariance of a K x N return window.

    The covariance is symmetrised; if its smallest eigenvalue is below
    ``-PSD_EPS`` the negative eigenvalues are clipped to zero (with a warning).
    """
    x = np.asarray(window, dtype=float)
    if x.ndim != 2:
        raise DataError("window must be a K x N matrix")
    k = x.shape[0]
    if k < 2:
        raise DataError(f"moment estimation needs at least 2 rows, got {k}")
    mu = x.mean(axis=0)
    dev = x - mu
    s = dev.T @ dev / (k - 1)
    s = 0.5 * (s + s.T)
    if s.shape[0] > 1:
        evals, evecs = np.linalg.eigh(s)
        if evals[0] < -PSD_EPS:
            warnings.warn(
                f"sample covariance not PSD (min eigenvalue {evals[0]:.3g}); clipping", NumericalWarning, stacklevel=2
            )
            s = (evecs * np.clip(evals, 0.0, None)) @ evecs.T
            s = 0.5 * (s + s.T)
    return MomentEstimates.from_arrays(mu, s)


def empirical_var_cvar(port_returns, alpha: float = 0.05) -> tuple[float, float]:
    """Empirical VaR and CVaR (both as positive losses) at tail level ``alpha``.

    The tail is the ``m = ceil(alpha * S)`` worst of ``S`` returns; VaR is the
    loss at the m-th worst return and CVaR the mean loss over the tail.
    """
    r = np.asarray(port_returns, dtype=float).ravel()
    if not 0.0 < alpha < 0.5:
        raise ValueError(f"alpha must lie in (0, 0.5), got {alpha}")
    m = tail_size(r.size, alpha)
    if m < 1 or r.size == 0:
        raise DataError("empty tail: need at least one return")
    tail = np.sort(r)[:m]
    return float(-tail[-1]), float(-tail.mean())


def tail_size(n_scenarios: int, alpha: float) -> int:
    # guard against alpha*S landing a hair above an integer in floating point
    return max(1, math.ceil(alpha * n_scenarios - 1e-9))


def portfolio_vol(w, sigma_mat) -> float:
    w = np.asarray(w, dtype=float)
    return float(math.sqrt(max(w @ sigma_mat @ w, 0.0)))


def risk_contributions(w, sigma_mat) -> np.ndarray:
    """Euler risk contributions ``w_i (Sigma w)_i / sigma_P``; they sum to ``sigma_P``."""
    w = np.asarray(w, dtype=float)
    sigma_mat = np.asarray(sigma_mat, dtype=float)
    sw = sigma_mat @ w
    vol = math.sqrt(max(float(w @ sw), 0.0))
    if vol <= 0.0:
        raise ValueError("risk contributions undefined for zero portfolio volatility")
    return w * sw / vol
