"""Performance and diversification measures of backtest records.

Undefined values (a Sharpe ratio with zero volatility, turnover with a
single rebalance, ...) are reported as NaN.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .data import sample_moments
from .estimation import MomentEstimates, estimate_moments
from .strategies import pdi

__all__ = [
    "DiversificationRow",
    "PerformanceRow",
    "adjusted_sharpe",
    "average_diversification",
    "cumulative_wealth",
    "diversification_metrics",
    "performance_metrics",
    "turnover_metrics",
]


@dataclass(frozen=True)
class PerformanceRow:
    strategy: str
    cw: float
    sr: float
    asr: float
    ceq: float
    to: float
    tto: float

    def as_dict(self):
        return {"strategy": self.strategy, "CW": self.cw, "SR": self.sr, "ASR": self.asr,
                "CEQ": self.ceq, "TO": self.to, "TTO": self.tto}


@dataclass(frozen=True)
class DiversificationRow:
    strategy: str
    dr_squared: float
    effective_n: float
    pdi: float

    def as_dict(self):
        return {"strategy": self.strategy, "DR2": self.dr_squared, "Neff": self.effective_n, "PDI": self.pdi}


def cumulative_wealth(daily_returns, mode: str = "linear", w0: float = 1.0) -> np.ndarray:
    """Wealth path ``W_0, W_1, ..., W_T``.

    ``linear`` adds each day's return to wealth, ``W_{t+1} = W_t + r_{t+1}``;
    ``compound`` treats the returns as log returns of wealth.
    """
    r = np.asarray(daily_returns, dtype=float)
    if mode == "linear":
        return w0 + np.concatenate([[0.0], np.cumsum(r)])
    if mode == "compound":
        return w0 * np.exp(np.concatenate([[0.0], np.cumsum(r)]))
    raise ValueError(f"unknown wealth mode {mode!r}")


def adjusted_sharpe(sr: float, skew: float, exkurt: float) -> float:
    """``SR * (1 + S/6 * SR - K/24 * SR^2)``."""
    return sr * (1.0 + skew / 6.0 * sr - exkurt / 24.0 * sr**2)


def turnover_metrics(record) -> tuple[float, float]:
    """Turnover and target turnover, averaged over rebalance transitions.

    ``TO`` is the mean of ``sum_j |w_{j,t+1} - w_{j,t+}|`` (trade needed from
    the drifted weights to the next target); ``TTO`` the mean of
    ``sum_j |w_{j,t+1} - w_{j,t}|``.
    """
    target = np.asarray(record.target_weights, dtype=float)
    drifted = np.asarray(record.drifted_weights, dtype=float)
    if target.shape[0] < 2:
        raise ValueError("turnover needs at least two rebalances")
    to = np.abs(target[1:] - drifted[:-1]).sum(axis=1).mean()
    tto = np.abs(target[1:] - target[:-1]).sum(axis=1).mean()
    return float(to), float(tto)


def performance_metrics(record, gamma: float = 1.0, wealth_mode: str | None = None) -> PerformanceRow:
    """CW, SR, ASR, CEQ, TO and TTO of one record.

    SR is the mean daily return over its standard deviation (``ddof=1``,
    zero riskless rate); CEQ is ``mean - gamma/2 * var``; ASR uses the
    sample skewness and excess kurtosis of the daily returns.  ``wealth_mode``
    defaults to the record's return mode.
    """
    r = np.asarray(record.daily_returns, dtype=float)
    if r.size == 0:
        raise ValueError("no daily returns")
    mode = wealth_mode or getattr(record, "return_mode", "linear")
    cw = float(cumulative_wealth(r, mode)[-1])
    mu = float(r.mean())
    if r.size > 1:
        _, sd, skew, kurt = (float(v[0]) for v in sample_moments(r[:, None]))
    else:
        sd, skew, kurt = 0.0, 0.0, 0.0
    ceq = mu - 0.5 * gamma * sd**2
    if sd > 0:
        sr = mu / sd
        asr = adjusted_sharpe(sr, skew, kurt)
    else:
        sr = asr = math.nan
    try:
        to, tto = turnover_metrics(record)
    except ValueError:
        to = tto = math.nan
    return PerformanceRow(record.strategy, cw, sr, asr, ceq, to, tto)


def diversification_metrics(weights, est: MomentEstimates) -> tuple[float, float, float]:
    """Effective N, squared diversification ratio and PDI of one portfolio.

    Returns
    -------
    (effective_n, dr_squared, pdi)
        ``1 / sum w^2``; ``(w'sigma)^2 / w'Sigma w`` (NaN at zero portfolio
        volatility); PDI of ``diag(w) Sigma diag(w)``.
    """
    w = np.asarray(weights, dtype=float)
    s = np.asarray(est.sigma_mat, dtype=float)
    neff = 1.0 / float(w @ w)
    var = float(w @ s @ w)
    dr2 = float((w @ est.vols) ** 2 / var) if var > 0 else math.nan
    try:
        p = pdi(w, s)
    except ValueError:
        p = math.nan
    return neff, dr2, p


def average_diversification(record, panel_values) -> DiversificationRow:
    """Diversification measures averaged over the record's rebalance dates.

    Each date uses the moments of its own estimation window, taken from the
    full ``(P, N)`` return matrix the backtest ran on.
    """
    x = np.asarray(getattr(panel_values, "values", panel_values), dtype=float)
    k_len = record.window_k_days
    rows = []
    for row, w in zip(record.rebalance_rows, record.target_weights):
        est = estimate_moments(x[row - k_len : row])
        rows.append(diversification_metrics(w, est))
    neff, dr2, p = np.nanmean(np.array(rows), axis=0) if rows else (math.nan,) * 3
    return DiversificationRow(record.strategy, float(dr2), float(neff), float(p))
