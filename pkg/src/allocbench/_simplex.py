"""Helpers for the long-only (optionally capped) simplex."""

from __future__ import annotations

import numpy as np

from .exceptions import InfeasibleError

SIMPLEX_TOL = 1e-8


def resolve_caps(caps, n: int) -> np.ndarray:
    """Return caps as an array (all ones when ``caps`` is None) after checking feasibility."""
    if caps is None:
        return np.ones(n)
    caps = np.asarray(getattr(caps, "caps", caps), dtype=float)
    if caps.shape != (n,):
        raise ValueError(f"caps must have shape ({n},), got {caps.shape}")
    if np.any(caps <= 0) or np.any(caps > 1 + 1e-12):
        raise InfeasibleError("each cap must lie in (0, 1]")
    if caps.sum() < 1 - 1e-12:
        raise InfeasibleError(f"caps sum to {caps.sum():.6g} < 1; no fully invested portfolio exists")
    return np.minimum(caps, 1.0)


def water_fill(caps: np.ndarray) -> np.ndarray:
    """As-equal-as-possible weights under upper bounds.

    Assets whose equal share exceeds their cap are pinned at the cap and the
    remainder is split equally over the rest, repeated until nothing binds.
    """
    n = caps.size
    w = np.zeros(n)
    free = np.ones(n, dtype=bool)
    remaining = 1.0
    while True:
        share = remaining / free.sum()
        over = free & (caps < share)
        if not over.any():
            w[free] = share
            return w
        w[over] = caps[over]
        remaining -= caps[over].sum()
        free &= ~over


def greedy_fill(scores: np.ndarray, caps: np.ndarray) -> np.ndarray:
    """Fill assets in descending ``scores`` order up to their caps (ties: lowest index)."""
    order = np.argsort(-scores, kind="stable")
    w = np.zeros(scores.size)
    remaining = 1.0
    for i in order:
        take = min(caps[i], remaining)
        w[i] = take
        remaining -= take
        if remaining <= 0:
            break
    return w


def project(v: np.ndarray, caps: np.ndarray) -> np.ndarray:
    """Euclidean projection of ``v`` onto ``{0 <= w <= caps, sum(w) = 1}``."""
    # sum(clip(v - tau, 0, caps)) is piecewise linear and non-increasing in tau
    bps = np.unique(np.concatenate([v, v - caps]))
    vals = np.clip(v[None, :] - bps[:, None], 0.0, caps[None, :]).sum(axis=1)
    # vals is non-increasing along bps; locate the segment containing 1
    j = np.searchsorted(-vals, -1.0, side="left")
    if j == 0:
        tau = bps[0]
    elif j >= bps.size:
        tau = bps[-1]
    else:
        t0, t1, f0, f1 = bps[j - 1], bps[j], vals[j - 1], vals[j]
        tau = t0 if f0 == f1 else t0 + (f0 - 1.0) * (t1 - t0) / (f0 - f1)
    return np.clip(v - tau, 0.0, caps)


def clean(w: np.ndarray, caps: np.ndarray) -> np.ndarray:
    """Remove solver round-off: clip to the box and renormalise the free mass."""
    w = np.clip(np.asarray(w, dtype=float), 0.0, caps)
    total = w.sum()
    if total <= 0:
        raise InfeasibleError("solver returned an all-zero weight vector")
    if abs(total - 1.0) > 1e-15:
        w = project(w / total, caps) if np.any(w / total > caps) else w / total
    return w


def check_weights(w: np.ndarray, caps: np.ndarray | None = None, tol: float = SIMPLEX_TOL) -> None:
    """Assert the WeightVector invariants (non-negative, sums to one, under caps)."""
    if np.any(w < -tol):
        raise AssertionError(f"negative weight {w.min():.3g}")
    if abs(w.sum() - 1.0) > tol:
        raise AssertionError(f"weights sum to {w.sum():.12g}")
    if caps is not None and np.any(w > caps + tol):
        raise AssertionError("weight above cap")
