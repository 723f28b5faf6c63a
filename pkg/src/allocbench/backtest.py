"""Rolling-window out-of-sample backtest.

At rebalance ``t`` the moments are estimated on rows ``[t*k, t*k + K)`` of
the panel and the resulting target weights are held over the next ``k``
rows.  Rows left over after the last full holding period are not used.
"""

from __future__ import annotations

import multiprocessing
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .combination import BootstrapConfig, combine_bootstrap, combine_naive
from .data import ReturnsPanel, VolumePanel
from .estimation import estimate_moments
from .exceptions import AllocBenchError, ConfigError, NoPositiveReturnError, SolverError
from .liquidity import LiquiditySpec, compute_caps
from .strategies import STRATEGIES, make_solver, solve_min_var

__all__ = [
    "ALL_STRATEGIES",
    "COMBINATIONS",
    "BacktestConfig",
    "BacktestRecord",
    "drift_weights",
    "n_periods",
    "run_backtest",
]

COMBINATIONS = ("CombNaive", "Comb")
ALL_STRATEGIES = STRATEGIES + COMBINATIONS
RETURN_MODES = ("linear", "compound")


@dataclass(frozen=True)
class BacktestConfig:
    """Backtest settings.

    Attributes
    ----------
    window_k_days : int
        Estimation window length K.
    rebalance_days : int
        Holding period k.
    strategies : tuple of str
        Names from ``ALL_STRATEGIES``.
    comb_members : tuple of str
        Individual strategies averaged by the two combinations.
    libro : LiquiditySpec or None
        Volume-based caps, recomputed at every rebalance from the volumes of
        the estimation window (or its last ``lookback`` days).
    alpha : float
        CVaR tail level.
    gamma : float
        Risk aversion (certainty equivalent).
    seed : int
        Root seed for the MD multi-start draws.
    bootstrap : BootstrapConfig
        Settings of the ``Comb`` strategy.
    md_restarts, md_warm_restarts : int
        MD local searches on the estimation window and on each bootstrap
        resample (the latter start from the window solution).
    return_mode : {"linear", "compound"}
        ``linear``: the day's return is ``w'x`` with the target weights.
        ``compound``: buy-and-hold within the period, the day's return is the
        log of the drifting portfolio's gross return.
    mvs_fallback : {None, "MinVar"}
        What MV-S does when no portfolio has a positive mean return: raise
        (None) or hold the minimum-variance portfolio.
    n_jobs : int
        Worker processes over rebalance dates (results do not depend on it).
    """

    window_k_days: int = 252
    rebalance_days: int = 21
    strategies: tuple = ALL_STRATEGIES
    comb_members: tuple = STRATEGIES
    libro: LiquiditySpec | None = None
    alpha: float = 0.05
    gamma: float = 1.0
    seed: int = 0
    bootstrap: BootstrapConfig = field(default_factory=BootstrapConfig)
    md_restarts: int = 10
    md_warm_restarts: int = 1
    return_mode: str = "linear"
    mvs_fallback: str | None = None
    n_jobs: int = 1

    def __post_init__(self):
        object.__setattr__(self, "strategies", tuple(self.strategies))
        object.__setattr__(self, "comb_members", tuple(self.comb_members))
        if self.window_k_days < 2:
            raise ConfigError("window_k_days must be at least 2")
        if self.rebalance_days < 1:
            raise ConfigError("rebalance_days must be at least 1")
        if not self.strategies:
            raise ConfigError("no strategies requested")
        for name in self.strategies:
            if name not in ALL_STRATEGIES:
                raise ConfigError(f"unknown strategy {name!r}; known: {ALL_STRATEGIES}")
        if len(set(self.strategies)) != len(self.strategies):
            raise ConfigError("duplicate strategy names")
        for name in self.comb_members:
            if name not in STRATEGIES:
                raise ConfigError(f"combination member {name!r} is not an individual strategy")
        if "Comb" in self.strategies and len(self.comb_members) < 2:
            raise ConfigError("the bootstrap combination needs at least two members")
        if "CombNaive" in self.strategies and len(self.comb_members) < 1:
            raise ConfigError("the naive combination needs at least one member")
        if not 0 < self.alpha < 0.5:
            raise ConfigError("alpha must lie in (0, 0.5)")
        if self.return_mode not in RETURN_MODES:
            raise ConfigError(f"return_mode must be one of {RETURN_MODES}")
        if self.mvs_fallback not in (None, "MinVar"):
            raise ConfigError("mvs_fallback must be None or 'MinVar'")
        if self.md_restarts < 1 or self.md_warm_restarts < 1:
            raise ConfigError("MD restarts must be at least 1")
        if self.n_jobs < 1:
            raise ConfigError("n_jobs must be at least 1")


@dataclass(frozen=True)
class BacktestRecord:
    """Weights and out-of-sample returns of one strategy.

    Attributes
    ----------
    strategy : str
    assets : tuple of str
    rebalance_rows : (T,) int ndarray
        Panel row of the first day held at each rebalance; the weights were
        estimated on rows ``[row - K, row)``.
    target_weights : (T, N) ndarray
    drifted_weights : (T, N) ndarray
        Weights at the end of each holding period, just before the next
        rebalance.
    daily_returns : (T*k,) ndarray
    dates : tuple
        Dates of ``daily_returns``.
    return_mode : str
    caps : (T, N) ndarray or None
    shares : (T, m) ndarray or None
        Bootstrap vote shares (``Comb`` only).
    """

    strategy: str
    assets: tuple
    rebalance_rows: np.ndarray
    target_weights: np.ndarray
    drifted_weights: np.ndarray
    daily_returns: np.ndarray
    dates: tuple
    return_mode: str = "linear"
    window_k_days: int = 252
    rebalance_days: int = 21
    caps: np.ndarray | None = None
    shares: np.ndarray | None = None

    @property
    def n_periods(self) -> int:
        return self.target_weights.shape[0]


def n_periods(n_days: int, window: int, step: int) -> int:
    """Number of full holding periods, ``floor((P - K) / k)``."""
    return max((n_days - window) // step, 0)


def drift_weights(w, period_returns) -> np.ndarray:
    """Weights after holding ``w`` through ``k`` days of log returns."""
    w = np.asarray(w, dtype=float)
    growth = np.exp(np.asarray(period_returns, dtype=float).reshape(-1, w.size).sum(axis=0))
    value = w * growth
    total = value.sum()
    if not total > 0:
        raise ValueError("portfolio value vanished while drifting")
    return value / total


def _period_returns(w, x, mode):
    if mode == "linear":
        return x @ w
    # buy and hold: value of each position relative to the rebalance date
    values = w * np.exp(np.cumsum(x, axis=0))
    gross = values.sum(axis=1)
    return np.log(gross / np.concatenate([[w.sum()], gross[:-1]]))


def _window_seed(seed, t):
    return int(np.random.SeedSequence([seed, t]).generate_state(1)[0])


# --------------------------------------------------------------------------
# per-window work; module-level so worker processes can run it
# --------------------------------------------------------------------------

_JOB = {}


def _solve_window(t):
    x_all = _JOB["x"]
    cfg = _JOB["cfg"]
    k_len, step = cfg.window_k_days, cfg.rebalance_days
    x = x_all[t * step : t * step + k_len]
    caps = None
    if cfg.libro is not None:
        vol = _JOB["volumes"][t * step : t * step + k_len]
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            caps = compute_caps(vol, cfg.libro, _JOB["liquid"]).caps
    est = estimate_moments(x)
    seed = _window_seed(cfg.seed, t)

    requested = set(cfg.strategies)
    needed = [s for s in STRATEGIES if s in requested]
    if requested & set(COMBINATIONS):
        needed += [s for s in cfg.comb_members if s not in needed]
    weights, errors = {}, {}
    for name in needed:
        try:
            solver = make_solver(name, alpha=cfg.alpha, seed=seed, md_restarts=cfg.md_restarts)
            weights[name] = solver(x, est, caps)
        except NoPositiveReturnError as exc:
            if name == "MV-S" and cfg.mvs_fallback == "MinVar":
                weights[name] = solve_min_var(est, caps)
            else:
                errors[name] = exc
        except (AllocBenchError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
            errors[name] = exc
    for name in needed:
        if name in errors and name in requested:
            raise SolverError(f"{name} failed on window {t}: {errors[name]}", strategy=name, window=t) from errors[name]

    shares = None
    if "CombNaive" in requested:
        members = [weights[m] for m in cfg.comb_members if m in weights]
        if not members:
            raise SolverError(f"every combination member failed on window {t}", strategy="CombNaive", window=t)
        weights["CombNaive"] = combine_naive(members)
    if "Comb" in requested:
        solvers = [
            make_solver(m, alpha=cfg.alpha, md_restarts=cfg.md_restarts, md_warm_restarts=cfg.md_warm_restarts)
            for m in cfg.comb_members
        ]
        try:
            sh, w = combine_bootstrap(
                solvers,
                x,
                cfg.bootstrap,
                caps,
                est=est,
                window_index=t,
                original_weights=[weights.get(m) for m in cfg.comb_members],
            )
        except AllocBenchError as exc:
            raise SolverError(f"Comb failed on window {t}: {exc}", strategy="Comb", window=t) from exc
        weights["Comb"] = w
        shares = np.asarray(sh.pi)
    return {name: weights[name] for name in cfg.strategies}, caps, shares


def run_backtest(panel: ReturnsPanel, volumes: VolumePanel | None = None, cfg: BacktestConfig | None = None):
    """Run every configured strategy through the rolling-window protocol.

    Parameters
    ----------
    panel : ReturnsPanel
    volumes : VolumePanel, optional
        Required when ``cfg.libro`` is set; must match the panel's dates and
        assets.
    cfg : BacktestConfig

    Returns
    -------
    list of BacktestRecord
        One per strategy, in ``cfg.strategies`` order.

    Raises
    ------
    SolverError
        A strategy failed; ``strategy`` and ``window`` say where.
    """
    cfg = cfg or BacktestConfig()
    x_all = np.asarray(panel.values, dtype=float)
    p, n = x_all.shape
    k_len, step = cfg.window_k_days, cfg.rebalance_days
    if k_len + step > p:
        raise ConfigError(f"panel has {p} days; need at least K + k = {k_len + step}")
    if cfg.libro is not None:
        if volumes is None:
            raise ConfigError("liquidity caps need a volume panel")
        if tuple(volumes.assets) != tuple(panel.assets) or tuple(volumes.dates) != tuple(panel.dates):
            raise ConfigError("volume panel does not match the returns panel")
    t_count = n_periods(p, k_len, step)

    liquid = np.array(panel.liquid, dtype=bool) if len(panel.liquid) == n else np.zeros(n, dtype=bool)
    _JOB.clear()
    _JOB.update(x=x_all, cfg=cfg, volumes=None if volumes is None else np.asarray(volumes.values), liquid=liquid)
    try:
        if cfg.n_jobs > 1 and t_count > 1:
            ctx = multiprocessing.get_context("fork")
            with ProcessPoolExecutor(max_workers=cfg.n_jobs, mp_context=ctx) as pool:
                results = list(pool.map(_solve_window, range(t_count)))
        else:
            results = [_solve_window(t) for t in range(t_count)]
    finally:
        _JOB.clear()

    rows = k_len + step * np.arange(t_count)
    dates = tuple(panel.dates[k_len : k_len + step * t_count])
    caps = None if cfg.libro is None else np.array([r[1] for r in results])
    records = []
    for name in cfg.strategies:
        target = np.array([r[0][name] for r in results])
        drifted = np.empty_like(target)
        daily = np.empty(step * t_count)
        for t in range(t_count):
            hold = x_all[rows[t] : rows[t] + step]
            drifted[t] = drift_weights(target[t], hold)
            daily[t * step : (t + 1) * step] = _period_returns(target[t], hold, cfg.return_mode)
        shares = np.array([r[2] for r in results]) if name == "Comb" else None
        for a in (target, drifted, daily) + ((shares,) if shares is not None else ()):
            a.setflags(write=False)
        records.append(
            BacktestRecord(
                strategy=name,
                assets=tuple(panel.assets),
                rebalance_rows=rows.copy(),
                target_weights=target,
                drifted_weights=drifted,
                daily_returns=daily,
                dates=dates,
                return_mode=cfg.return_mode,
                window_k_days=k_len,
                rebalance_days=step,
                caps=caps,
                shares=shares,
            )
        )
    return records

