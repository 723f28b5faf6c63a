"""Model combination: naive averaging and bootstrap-vote weighting.

The bootstrap combination resamples the estimation window with the
stationary bootstrap, re-solves every model on each resample, and gives each
model the share of resamples on which it achieved the highest
certainty-equivalent utility.  The combined weights average the models'
weights on the original window with those shares.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .estimation import MomentEstimates, estimate_moments
from .exceptions import AllocBenchError, ConfigError, DataError
from .strategies import make_solver

__all__ = [
    "BootstrapConfig",
    "ModelShares",
    "auto_block_length",
    "ceq_loss",
    "combine_bootstrap",
    "combine_naive",
    "stationary_bootstrap",
]

# failures of an individual model on a resample that only cost it the vote
_MODEL_FAILURES = (AllocBenchError, ValueError, ArithmeticError, np.linalg.LinAlgError)


def ceq_loss(w, est: MomentEstimates, gamma: float = 1.0) -> float:
    """Certainty-equivalent utility ``w'mu - gamma/2 * w'Sigma w`` (higher is better)."""
    w = np.asarray(w, dtype=float)
    return float(w @ est.mu - 0.5 * gamma * (w @ est.sigma_mat @ w))


def combine_naive(weight_set) -> np.ndarray:
    """Equal-share average of ``m`` weight vectors."""
    ws = np.asarray(weight_set, dtype=float)
    if ws.ndim != 2 or ws.shape[0] < 1:
        raise ValueError("need an (m, N) stack of weight vectors with m >= 1")
    return ws.mean(axis=0)


# --------------------------------------------------------------------------
# stationary bootstrap
# --------------------------------------------------------------------------


def auto_block_length(series) -> float:
    """Expected block length for the stationary bootstrap.

    Flat-top lag-window rule: the bandwidth is twice the first lag after
    which ``K_N`` consecutive autocorrelations are insignificant, and the
    block length is ``(2 G^2 / D)^(1/3) n^(1/3)`` with ``G`` the weighted
    sum of ``|k| R(k)`` and ``D = 2 g(0)^2`` from the same lag window.  The
    result is clamped to ``[1, n/3]``.

    Parameters
    ----------
    series : (n,) array_like
        At least 10 observations.
    """
    x = np.asarray(series, dtype=float).ravel()
    n = x.size
    if n < 10:
        raise DataError(f"block-length selection needs at least 10 observations, got {n}")
    e = x - x.mean()
    acv0 = e @ e / n
    if acv0 <= 1e-28 * max(x @ x / n, 1e-300):
        return 1.0
    kn = max(5, math.ceil(math.log10(n)))
    m_max = min(math.ceil(math.sqrt(n)) + kn, n - 1)
    acv = np.array([e[k:] @ e[: n - k] / n for k in range(m_max + 1)])
    rho = np.abs(acv[1:] / acv0)
    crit = 2.0 * math.sqrt(math.log10(n) / n)
    m_hat = m_max
    for m in range(0, m_max - kn + 1):
        if np.all(rho[m : m + kn] < crit):
            m_hat = m
            break
    big_m = min(2 * max(m_hat, 1), m_max)
    k = np.arange(1, big_m + 1)
    lam = np.where(k / big_m <= 0.5, 1.0, 2.0 * (1.0 - k / big_m))
    g_big = 2.0 * np.sum(lam * k * acv[k])
    g0 = acv0 + 2.0 * np.sum(lam * acv[k])
    if g0 <= 0:
        return 1.0
    b = (2.0 * g_big**2 / (2.0 * g0**2)) ** (1.0 / 3.0) * n ** (1.0 / 3.0)
    return float(min(max(b, 1.0), n / 3.0))


def stationary_bootstrap_indices(n: int, expected_block: float, count: int, rng) -> np.ndarray:
    """Row indices of one stationary-bootstrap resample.

    Blocks start at uniform positions, continue with wrap-around, and end
    with probability ``1/expected_block`` after each step.
    """
    if expected_block < 1:
        raise ValueError("expected block length must be at least 1")
    p = 0.0 if math.isinf(expected_block) else 1.0 / expected_block
    starts = rng.integers(n, size=count)
    restart = rng.random(count) < p
    restart[0] = True
    t = np.arange(count)
    last = np.maximum.accumulate(np.where(restart, t, 0))
    return (starts[last] + t - last) % n


def stationary_bootstrap(window, expected_block: float, count: int | None = None, seed=0) -> np.ndarray:
    """Resample the rows of a K x N window jointly with the stationary bootstrap.

    Parameters
    ----------
    window : (K, N) array_like
    expected_block : float
        Mean block length (``inf`` gives a single wrapped block).
    count : int, optional
        Rows to draw, default K.
    seed : int, SeedSequence or Generator
    """
    x = np.asarray(window, dtype=float)
    if x.ndim == 1:
        x = x[:, None]
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    idx = stationary_bootstrap_indices(x.shape[0], expected_block, count or x.shape[0], rng)
    return x[idx]


# --------------------------------------------------------------------------
# bootstrap combination
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BootstrapConfig:
    """Settings of the bootstrap combination.

    ``block`` is ``"auto"`` (automatic selection on the equal-weight
    portfolio return of the window) or a fixed expected block length.
    """

    B: int = 100
    seed: int = 0
    gamma: float = 1.0
    block: str | float = "auto"

    def __post_init__(self):
        if self.B < 1:
            raise ConfigError("B must be at least 1")
        if self.block != "auto":
            try:
                blk = float(self.block)
            except (TypeError, ValueError):
                raise ConfigError(f"block must be 'auto' or a number, got {self.block!r}") from None
            if not blk >= 1:
                raise ConfigError("fixed expected block length must be at least 1")
            object.__setattr__(self, "block", blk)


@dataclass(frozen=True)
class ModelShares:
    """Vote shares of the combined models.

    Attributes
    ----------
    pi : (m,) ndarray
        Share of resamples on which each model scored best.
    votes : (m,) int ndarray
    block_length : float
        Expected block length used for the resamples.
    failures : (m,) int ndarray
        Resamples on which each model's solver raised.
    """

    pi: np.ndarray
    votes: np.ndarray
    block_length: float = float("nan")
    failures: np.ndarray = field(default=None)


def _as_solver(model, **kw) -> Callable:
    return make_solver(model, **kw) if isinstance(model, str) else model


def _call(solver, window, est, caps, init=None, seed=None):
    if getattr(solver, "warm_start", False):
        return solver(window, est, caps, init=init, seed=seed)
    return solver(window, est, caps)


def combine_bootstrap(
    models: Sequence,
    window,
    cfg: BootstrapConfig = BootstrapConfig(),
    caps=None,
    *,
    est: MomentEstimates | None = None,
    window_index: int = 0,
    original_weights=None,
):
    """Bootstrap-vote combination of ``m >= 2`` allocation models.

    Parameters
    ----------
    models : sequence of strategy names or solvers
        A solver is called as ``solver(window, est, caps)``.  Solvers with a
        true ``warm_start`` attribute also receive ``init`` (their weights on
        the original window) and ``seed``.
    window : (K, N) array_like
    cfg : BootstrapConfig
    caps : optional per-asset upper bounds, applied on every resample
    window_index : int
        Mixed into the per-resample seeds so different backtest windows draw
        independent resamples.
    original_weights : sequence of (N,) arrays, optional
        Weights already solved on ``window``; entries may be None for a model
        that failed there.

    Returns
    -------
    (ModelShares, ndarray)
        Shares and combined weights ``sum_i pi_i w_i``.

    Notes
    -----
    On each resample the winner is the model with the highest
    :func:`ceq_loss` on the resample's own moments; ties go to the lowest
    model index.  A model that fails on a resample cannot win it.  A model
    that fails on the original window is excluded altogether.
    """
    solvers = [_as_solver(m) for m in models]
    m = len(solvers)
    if m < 2:
        raise ValueError("bootstrap combination needs at least two models")
    x = np.asarray(window, dtype=float)
    k, n = x.shape
    if est is None:
        est = estimate_moments(x)

    if original_weights is None:
        original_weights = []
        for s in solvers:
            try:
                original_weights.append(_call(s, x, est, caps))
            except _MODEL_FAILURES:
                original_weights.append(None)
    active = np.array([w is not None for w in original_weights])
    if not active.any():
        raise AllocBenchError("every combined model failed on the estimation window")

    block = auto_block_length(x.mean(axis=1)) if cfg.block == "auto" else float(cfg.block)

    votes = np.zeros(m, dtype=int)
    failures = np.zeros(m, dtype=int)
    for b in range(cfg.B):
        rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, window_index, b]))
        sample = x[stationary_bootstrap_indices(k, block, k, rng)]
        solver_seed = int(rng.integers(2**32))
        est_b = estimate_moments(sample)
        scores = np.full(m, -np.inf)
        for i in np.flatnonzero(active):
            try:
                w = _call(solvers[i], sample, est_b, caps, init=original_weights[i], seed=solver_seed)
                scores[i] = ceq_loss(w, est_b, cfg.gamma)
            except _MODEL_FAILURES:
                failures[i] += 1
            if not np.isfinite(scores[i]):
                scores[i] = -np.inf
        if np.all(scores == -np.inf):
            raise AllocBenchError(f"every combined model failed on bootstrap sample {b}")
        votes[int(np.argmax(scores))] += 1

    pi = votes / cfg.B
    w_comb = np.zeros(n)
    for i in np.flatnonzero(votes):
        w_comb += pi[i] * np.asarray(original_weights[i], dtype=float)
    for a in (pi, votes, failures):
        a.setflags(write=False)
    return ModelShares(pi, votes, block, failures), w_comb
