"""Synthetic return and volume panels for tests, demos and benchmarks.

Traditional assets are drawn with modest means and volatilities from a
one-factor model; crypto-like assets have higher means, higher volatility,
fat tails (Student-t shocks) and a common crypto factor.  Volumes are
log-normal, large for traditional assets and spread over several orders of
magnitude for crypto assets, so volume-based caps bind for some of them.
"""

from __future__ import annotations

import datetime as dt

import numpy as np

from .data import ReturnsPanel, VolumePanel

__all__ = ["business_days", "synthetic_panel"]


def business_days(n: int, start: dt.date = dt.date(2015, 1, 5)) -> list[dt.date]:
    """``n`` consecutive weekdays starting at ``start``."""
    out, d = [], start
    while len(out) < n:
        if d.weekday() < 5:
            out.append(d)
        d += dt.timedelta(days=1)
    return out


def synthetic_panel(
    n_traditional: int = 5,
    n_crypto: int = 5,
    n_days: int = 1000,
    seed: int = 0,
    *,
    crypto_mean: float = 1.5e-3,
    crypto_vol: float = 0.05,
    t_dof: float = 4.0,
) -> tuple[ReturnsPanel, VolumePanel]:
    """Draw a panel of daily log returns and USD volumes.

    Parameters
    ----------
    n_traditional, n_crypto : int
        Asset counts; the total must be at least 2.
    n_days : int
    seed : int
    crypto_mean, crypto_vol : float
        Typical daily mean and volatility of the crypto assets.
    t_dof : float
        Degrees of freedom of the crypto shocks.

    Returns
    -------
    (ReturnsPanel, VolumePanel)
        Traditional assets are flagged liquid.
    """
    rng = np.random.default_rng(seed)
    n = n_traditional + n_crypto
    if n < 2:
        raise ValueError("need at least two assets")
    market = rng.normal(0.0, 0.008, n_days)
    crypto_factor = rng.standard_t(t_dof, n_days) * crypto_vol * 0.6 / np.sqrt(t_dof / (t_dof - 2))

    cols = []
    for _ in range(n_traditional):
        beta = rng.uniform(0.3, 1.2)
        mu = rng.uniform(1e-4, 5e-4)
        vol = rng.uniform(0.004, 0.012)
        cols.append(mu + beta * market + rng.normal(0.0, vol, n_days))
    for _ in range(n_crypto):
        beta = rng.uniform(0.7, 1.3)
        mu = crypto_mean * rng.uniform(0.3, 1.5)
        vol = crypto_vol * rng.uniform(0.5, 1.0)
        shock = rng.standard_t(t_dof, n_days) * vol / np.sqrt(t_dof / (t_dof - 2))
        cols.append(mu + 0.2 * market + beta * crypto_factor + shock)
    x = np.column_stack(cols)

    level = np.concatenate([
        rng.uniform(9.0, 11.0, n_traditional),  # log10 USD, 1e9 to 1e11
        rng.uniform(5.0, 9.5, n_crypto),
    ])
    vol_usd = 10.0 ** (level + rng.normal(0.0, 0.15, (n_days, n)))

    dates = business_days(n_days)
    assets = [f"TRAD{i + 1}" for i in range(n_traditional)] + [f"CC{i + 1}" for i in range(n_crypto)]
    classes = ["traditional"] * n_traditional + ["crypto"] * n_crypto
    liquid = [True] * n_traditional + [False] * n_crypto
    panel = ReturnsPanel(dates, assets, x, classes, liquid)
    return panel, VolumePanel(dates, assets, vol_usd)
