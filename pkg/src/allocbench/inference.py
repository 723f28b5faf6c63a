"""Pairwise strategy tests and mean-variance spanning tests.

The pairwise test studentises the difference of two Sharpe ratios (or
certainty equivalents) through the delta method on the first and second
raw moments of the two return series, with a kernel (HAC) estimate of their
long-run covariance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .exceptions import DataError

__all__ = [
    "PairwiseTest",
    "PairwiseTestMatrix",
    "SpanningResult",
    "hac_covariance",
    "lw_pairwise_test",
    "pairwise_test_matrix",
    "significance_tier",
    "spanning_tests",
]

KERNELS = ("parzen", "bartlett", "quadratic-spectral")
SIGNIFICANCE_LEVELS = (0.01, 0.05, 0.1)


# --------------------------------------------------------------------------
# HAC covariance
# --------------------------------------------------------------------------


def _kernel_weights(kernel, lags, bandwidth):
    x = lags / bandwidth
    if kernel == "bartlett":
        return np.clip(1.0 - np.abs(x), 0.0, None)
    if kernel == "parzen":
        ax = np.abs(x)
        return np.where(ax <= 0.5, 1 - 6 * ax**2 + 6 * ax**3, np.where(ax <= 1, 2 * (1 - ax) ** 3, 0.0))
    if kernel == "quadratic-spectral":
        z = 6 * np.pi * x / 5
        with np.errstate(divide="ignore", invalid="ignore"):
            w = 25 / (12 * np.pi**2 * x**2) * (np.sin(z) / z - np.cos(z))
        return np.where(x == 0, 1.0, w)
    raise ValueError(f"unknown kernel {kernel!r}; known: {KERNELS}")


def _auto_bandwidth(y, kernel):
    """Plug-in bandwidth from AR(1) fits to each (standardised) column."""
    t = y.shape[0]
    num = den = 0.0
    for col in y.T:
        c0 = col[:-1] @ col[:-1]
        if c0 <= 0:
            continue
        rho = float(np.clip(col[1:] @ col[:-1] / c0, -0.97, 0.97))
        if kernel == "bartlett":
            num += 4 * rho**2 / ((1 - rho) ** 6 * (1 + rho) ** 2)
        else:
            num += 4 * rho**2 / (1 - rho) ** 8
        den += 1 / (1 - rho) ** 4
    a = num / den if den > 0 else 0.0
    if kernel == "bartlett":
        return 1.1447 * (a * t) ** (1 / 3)
    if kernel == "parzen":
        return 2.6614 * (a * t) ** (1 / 5)
    return 1.3221 * (a * t) ** (1 / 5)


def hac_covariance(y, kernel: str = "parzen", bandwidth: float | None = None, small_sample: bool = True):
    """Kernel estimate of the long-run covariance of the rows of ``y``.

    Parameters
    ----------
    y : (T, d) array_like
        Demeaned moment series.
    kernel : {"parzen", "bartlett", "quadratic-spectral"}
    bandwidth : float, optional
        Automatic (AR(1) plug-in on standardised columns) when omitted.
    small_sample : bool
        Scale by ``T / (T - d)``.

    Returns
    -------
    (cov, bandwidth)
    """
    y = np.asarray(y, dtype=float)
    t, d = y.shape
    scale = y.std(axis=0)
    scale[scale == 0] = 1.0
    if bandwidth is None:
        bandwidth = _auto_bandwidth(y / scale, kernel)
    bandwidth = max(float(bandwidth), 1e-12)
    cov = y.T @ y / t
    max_lag = t - 1 if kernel == "quadratic-spectral" else min(int(math.floor(bandwidth)), t - 1)
    if max_lag >= 1:
        lags = np.arange(1, max_lag + 1)
        weights = _kernel_weights(kernel, lags.astype(float), bandwidth)
        for lag, wgt in zip(lags, weights):
            if wgt == 0:
                continue
            g = y[lag:].T @ y[:-lag] / t
            cov += wgt * (g + g.T)
    if small_sample:
        cov *= t / (t - d)
    return 0.5 * (cov + cov.T), bandwidth


# --------------------------------------------------------------------------
# pairwise test
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class PairwiseTest:
    """Outcome of one pairwise test.

    ``difference`` is metric(i) minus metric(j).  ``degenerate`` marks a
    difference whose estimated variance is zero: ``p_value`` is then 1 when
    the difference is zero too (identical series) and 0 otherwise (say, one
    series is the other plus a constant, for the CEQ).
    """

    metric: str
    difference: float
    std_error: float
    statistic: float
    p_value: float
    bandwidth: float
    degenerate: bool = False


def _metric_value_grad(metric, mu, s, gamma):
    var = s - mu**2
    if metric == "SR":
        if var <= 0:
            return math.nan, None
        return mu / math.sqrt(var), np.array([s / var**1.5, -0.5 * mu / var**1.5])
    return mu - 0.5 * gamma * var, np.array([1.0 + gamma * mu, -0.5 * gamma])


def lw_pairwise_test(
    returns_i,
    returns_j,
    metric: str = "SR",
    gamma: float = 1.0,
    *,
    kernel: str = "parzen",
    bandwidth: float | None = None,
) -> PairwiseTest:
    """Two-sided HAC test of equal Sharpe ratios or certainty equivalents.

    The metric of each series is a smooth function of its mean and mean
    square; the delta method maps the HAC covariance of the four moment
    series to a standard error for the difference, compared with the
    standard normal.

    Parameters
    ----------
    returns_i, returns_j : (T,) array_like
        Aligned daily returns, ``T >= 30``.
    metric : {"SR", "CEQ"}
    gamma : float
        Risk aversion of the CEQ.
    kernel, bandwidth
        Passed to :func:`hac_covariance`.
    """
    if metric not in ("SR", "CEQ"):
        raise ValueError("metric must be 'SR' or 'CEQ'")
    ri = np.asarray(returns_i, dtype=float).ravel()
    rj = np.asarray(returns_j, dtype=float).ravel()
    if ri.shape != rj.shape:
        raise ValueError("the two return series must have equal length")
    t = ri.size
    if t < 30:
        raise DataError(f"pairwise test needs at least 30 observations, got {t}")
    moments = np.column_stack([ri, rj, ri**2, rj**2])
    m = moments.mean(axis=0)
    vi, gi = _metric_value_grad(metric, m[0], m[2], gamma)
    vj, gj = _metric_value_grad(metric, m[1], m[3], gamma)
    if gi is None or gj is None:
        return PairwiseTest(metric, math.nan, math.nan, math.nan, 1.0, math.nan, True)
    diff = float(vi - vj)
    grad = np.array([gi[0], -gj[0], gi[1], -gj[1]])
    psi, bw = hac_covariance(moments - m, kernel, bandwidth)
    var = float(grad @ psi @ grad) / t
    # identical or perfectly offsetting series leave only round-off
    ref = float(np.abs(grad) @ np.abs(psi) @ np.abs(grad)) / t
    if not var > 1e-14 * ref or not np.isfinite(var):
        same = abs(diff) <= 1e-12 * max(abs(vi), abs(vj), 1e-300)
        return PairwiseTest(metric, diff, 0.0, math.nan, 1.0 if same else 0.0, bw, True)
    se = math.sqrt(var)
    z = diff / se
    p = float(2.0 * stats.norm.sf(abs(z)))
    return PairwiseTest(metric, diff, se, z, min(max(p, 0.0), 1.0), bw, False)


@dataclass(frozen=True)
class PairwiseTestMatrix:
    """p-values of all strategy pairs.

    ``p_values_sr`` holds entries below the diagonal, ``p_values_ceq`` above
    it; everything else is NaN.  :meth:`combined` overlays the two.
    """

    strategies: tuple
    p_values_sr: np.ndarray
    p_values_ceq: np.ndarray

    def combined(self) -> np.ndarray:
        out = np.where(np.isnan(self.p_values_sr), self.p_values_ceq, self.p_values_sr)
        np.fill_diagonal(out, np.nan)
        return out


def pairwise_test_matrix(returns, strategies, gamma: float = 1.0, **kw) -> PairwiseTestMatrix:
    """Run :func:`lw_pairwise_test` for every pair of columns of ``returns``."""
    r = np.asarray(returns, dtype=float)
    m = r.shape[1]
    if len(strategies) != m:
        raise ValueError("one name per return column required")
    p_sr = np.full((m, m), np.nan)
    p_ceq = np.full((m, m), np.nan)
    for i in range(m):
        for j in range(i):
            p_sr[i, j] = lw_pairwise_test(r[:, i], r[:, j], "SR", gamma, **kw).p_value
            p_ceq[j, i] = lw_pairwise_test(r[:, j], r[:, i], "CEQ", gamma, **kw).p_value
    return PairwiseTestMatrix(tuple(strategies), p_sr, p_ceq)


def significance_tier(p: float) -> str:
    """``"***"``, ``"**"``, ``"*"`` for p below 0.01, 0.05, 0.1, else ``""``."""
    if not np.isfinite(p):
        return ""
    for level, mark in zip(SIGNIFICANCE_LEVELS, ("***", "**", "*")):
        if p < level:
            return mark
    return ""


# --------------------------------------------------------------------------
# spanning tests
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class SpanningResult:
    """Spanning statistics for one candidate asset.

    ``f_hk`` tests alpha = 0 and sum(beta) = 1 jointly; ``f1`` tests
    alpha = 0 (tangency portfolios); ``f2`` tests sum(beta) = 1 given
    alpha = 0 (global minimum-variance portfolios).
    """

    f_hk: float
    p_hk: float
    f1: float
    p1: float
    f2: float
    p2: float
    alpha: float = math.nan
    beta_sum: float = math.nan

    def rejects(self, level: float = 0.1) -> bool:
        return min(self.p_hk, self.p1, self.p2) < level


def _ssr(design, y):
    coef, _, rank, _ = np.linalg.lstsq(design, y, rcond=None)
    if rank < design.shape[1]:
        raise DataError("benchmark returns are rank deficient")
    e = y - design @ coef
    return float(e @ e), coef


def _f_from_ratio(restricted, unrestricted, df_num, df_den, tiny):
    if unrestricted <= tiny:
        if restricted <= tiny:
            return 0.0, 1.0
        return math.inf, 0.0
    f = max(df_den / df_num * (restricted / unrestricted - 1.0), 0.0)
    return f, float(stats.f.sf(f, df_num, df_den))


def spanning_tests(benchmark, candidate) -> SpanningResult:
    """Regression spanning tests of one candidate against benchmark assets.

    Regresses ``candidate = alpha + benchmark @ beta + e``.  With ``T``
    observations and ``K`` benchmarks::

        F_HK = (T-K-1)/2 * (SSR_both / SSR_u - 1)   ~ F(2, T-K-1)
        F1   = (T-K-1)   * (SSR_a / SSR_u - 1)      ~ F(1, T-K-1)
        F2   = (T-K)     * (SSR_both / SSR_a - 1)   ~ F(1, T-K)

    where ``SSR_u`` is unrestricted, ``SSR_a`` imposes alpha = 0 and
    ``SSR_both`` imposes alpha = 0 and sum(beta) = 1.  The F forms are
    exact under normal errors.
    """
    x = np.asarray(benchmark, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    y = np.asarray(candidate, dtype=float).ravel()
    t, k = x.shape
    if y.size != t:
        raise ValueError("benchmark and candidate lengths differ")
    if t <= k + 2:
        raise DataError(f"need more than K + 2 = {k + 2} observations, got {t}")
    ones = np.ones((t, 1))
    ssr_u, coef_u = _ssr(np.hstack([ones, x]), y)
    ssr_a, _ = _ssr(x, y)
    # alpha = 0, sum(beta) = 1:  y - x_K = sum_{k<K} beta_k (x_k - x_K)
    last = x[:, -1]
    if k > 1:
        ssr_b, _ = _ssr(x[:, :-1] - last[:, None], y - last)
    else:
        e = y - last
        ssr_b = float(e @ e)
    tiny = 1e-24 * max(float(y @ y), float(np.finfo(float).tiny))
    f_hk, p_hk = _f_from_ratio(ssr_b, ssr_u, 2, t - k - 1, tiny)
    f1, p1 = _f_from_ratio(ssr_a, ssr_u, 1, t - k - 1, tiny)
    f2, p2 = _f_from_ratio(ssr_b, ssr_a, 1, t - k, tiny)
    return SpanningResult(f_hk, p_hk, f1, p1, f2, p2, float(coef_u[0]), float(coef_u[1:].sum()))
