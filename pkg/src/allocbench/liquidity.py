"""Liquidity-bounded weight caps derived from traded volume.

An asset may hold at most the share of the investment that can be traded
against a fraction of its average daily dollar volume::

    cap_i = min(1, volume_fraction * mean_volume_i / investment_sum)

Assets flagged as liquid (typically traditional assets) get cap 1.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .exceptions import ConfigError, DataError, InfeasibleError, NumericalWarning

__all__ = ["BoundsSpec", "LiquiditySpec", "compute_caps"]

# a zero-volume asset still needs a strictly positive cap
MIN_CAP = 1e-12


@dataclass(frozen=True)
class LiquiditySpec:
    """Parameters of the volume-based cap.

    Attributes
    ----------
    investment_sum : float
        Portfolio size in USD.
    volume_fraction : float
        Fraction of average daily volume that may be traded, in (0, 1].
    lookback : int or None
        Number of trailing days averaged; ``None`` uses the whole window
        handed to :func:`compute_caps` (the estimation window in a backtest).
    """

    investment_sum: float = 1e7
    volume_fraction: float = 0.01
    lookback: int | None = None

    def __post_init__(self):
        if not self.investment_sum > 0:
            raise ConfigError("investment_sum must be positive")
        if not 0 < self.volume_fraction <= 1:
            raise ConfigError("volume_fraction must lie in (0, 1]")
        if self.lookback is not None and self.lookback < 1:
            raise ConfigError("lookback must be at least 1")


@dataclass(frozen=True)
class BoundsSpec:
    """Per-asset upper bounds on portfolio weights.

    ``repaired`` is set when the raw caps summed to less than one and were
    rescaled to make a fully invested portfolio feasible.
    """

    caps: np.ndarray
    repaired: bool = False
    raw_caps: np.ndarray | None = field(default=None, compare=False)

    def __post_init__(self):
        caps = np.array(self.caps, dtype=float)
        if caps.ndim != 1 or caps.size == 0:
            raise ValueError("caps must be a non-empty vector")
        if np.any(caps <= 0) or np.any(caps > 1 + 1e-12):
            raise InfeasibleError("each cap must lie in (0, 1]")
        if caps.sum() < 1 - 1e-12:
            raise InfeasibleError(f"caps sum to {caps.sum():.6g} < 1")
        caps.setflags(write=False)
        object.__setattr__(self, "caps", caps)

    @property
    def binding_possible(self) -> bool:
        return bool(np.any(self.caps < 1))


def compute_caps(volumes, spec: LiquiditySpec, liquid=None) -> BoundsSpec:
    """Weight caps from a window of daily USD volumes.

    Parameters
    ----------
    volumes : (L, N) array_like or VolumePanel
        Trailing volumes; only the last ``spec.lookback`` rows are used.
    spec : LiquiditySpec
    liquid : (N,) bool array_like, optional
        Assets exempt from the cap.

    Returns
    -------
    BoundsSpec
        If the caps sum to less than one they are rescaled proportionally to
        sum to one, ``repaired`` is set and a warning is issued.
    """
    v = np.asarray(getattr(volumes, "values", volumes), dtype=float)
    if v.ndim == 1:
        v = v[None, :]
    if v.shape[0] == 0:
        raise DataError("empty volume window")
    if not np.all(np.isfinite(v)) or np.any(v < 0):
        raise DataError("volumes must be finite and non-negative")
    if spec.lookback is not None:
        v = v[-spec.lookback :]
    n = v.shape[1]
    liquid = np.zeros(n, dtype=bool) if liquid is None else np.asarray(liquid, dtype=bool)
    if liquid.shape != (n,):
        raise ValueError(f"liquid mask must have shape ({n},)")
    if not liquid.any() and np.all(v == 0):
        raise DataError("all volumes are zero; no asset can be traded")

    raw = np.minimum(1.0, spec.volume_fraction * v.mean(axis=0) / spec.investment_sum)
    raw[liquid] = 1.0
    caps = np.maximum(raw, MIN_CAP)
    total = caps.sum()
    repaired = total < 1.0
    if repaired:
        warnings.warn(
            f"liquidity caps sum to {total:.4g} < 1; rescaling proportionally", NumericalWarning, stacklevel=2
        )
        caps = np.minimum(caps / total, 1.0)
    return BoundsSpec(caps, repaired=repaired, raw_caps=raw)
