"""Command-line interface: ``allocbench {backtest,frontier,spanning,describe,combine}``.

Each command computes all of its tables in memory, then writes them to the
output directory through temporary files and atomic renames, so a run
either produces every declared file or none.  Every file starts with the
resolved configuration, enough to rerun it.

Exit codes: 0 success, 1 configuration error (including missing input
files), 2 computation error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import tempfile
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .backtest import run_backtest
from .combination import combine_bootstrap, combine_naive
from .config import REBALANCE_NAMES, RunConfig, load_config
from .data import descriptive_stats, load_asset_metadata, load_panel
from .estimation import estimate_moments
from .exceptions import AllocBenchError, ConfigError, NoPositiveReturnError
from .frontier import trace_frontier
from .inference import lw_pairwise_test, significance_tier, spanning_tests
from .liquidity import compute_caps
from .metrics import average_diversification, cumulative_wealth, performance_metrics
from .strategies import make_solver, solve_min_var

__all__ = ["Table", "main", "write_tables"]

COMMANDS = ("backtest", "frontier", "spanning", "describe", "combine")


@dataclass(frozen=True)
class Table:
    """A named report table: column names and rows of plain values."""

    name: str
    columns: tuple
    rows: list


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return "nan" if math.isnan(v) else repr(v)
    if v is None:
        return ""
    return str(v)


def _json_value(v):
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return None if not math.isfinite(v) else v
    return v


def render_csv(table: Table, command: str, cfg: RunConfig) -> str:
    buf = io.StringIO()
    buf.write(f"# allocbench {__version__} {command} {table.name}\n")
    for line in cfg.echo().splitlines():
        buf.write(f"# {line}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    for row in table.rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def render_json(table: Table, command: str, cfg: RunConfig) -> str:
    doc = {
        "allocbench": __version__,
        "command": command,
        "table": table.name,
        "config": cfg.settings,
        "columns": list(table.columns),
        "rows": [dict(zip(table.columns, map(_json_value, row))) for row in table.rows],
    }
    return json.dumps(doc, indent=1, allow_nan=False) + "\n"


RENDERERS = {"csv": render_csv, "json": render_json}


def write_tables(tables, command: str, cfg: RunConfig) -> list[Path]:
    """Render every table in every configured format and write them atomically.

    All contents are rendered before anything touches the disk; files are
    then written under temporary names and renamed into place.
    """
    contents = {}
    for table in tables:
        for fmt in cfg.formats:
            contents[f"{table.name}.{fmt}"] = RENDERERS[fmt](table, command, cfg)
    out = cfg.output_dir
    out.mkdir(parents=True, exist_ok=True)
    temps = []
    try:
        for name, text in contents.items():
            fd, tmp = tempfile.mkstemp(prefix=f".{name}.", suffix=".tmp", dir=out)
            temps.append((tmp, out / name))
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
        for tmp, final in temps:
            os.replace(tmp, final)
    except BaseException:
        for tmp, _ in temps:
            if os.path.exists(tmp):
                os.unlink(tmp)
        raise
    return [final for _, final in temps]


# --------------------------------------------------------------------------
# commands
# --------------------------------------------------------------------------


def _load(cfg: RunConfig):
    metadata = load_asset_metadata(cfg.metadata) if cfg.metadata is not None else None
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return load_panel(
            cfg.returns,
            cfg.volumes,
            metadata=metadata,
            drop_incomplete_assets=cfg.drop_incomplete_assets,
        )


def cmd_backtest(cfg: RunConfig) -> list[Table]:
    """Performance, diversification, weights, returns and pairwise p-values."""
    panel, volumes = _load(cfg)
    bt = cfg.backtest
    records = run_backtest(panel, volumes, bt)

    perf = [performance_metrics(r, bt.gamma).as_dict() for r in records]
    cols = ("strategy", "CW", "SR", "ASR", "CEQ", "TO", "TTO")
    tables = [Table("performance", cols, [[p[c] for c in cols] for p in perf])]

    div = [average_diversification(r, panel.values).as_dict() for r in records]
    cols = ("strategy", "DR2", "Neff", "PDI")
    tables.append(Table("diversification", cols, [[d[c] for c in cols] for d in div]))

    rows = []
    for r in records:
        for t, row in enumerate(r.rebalance_rows):
            date = panel.dates[row].isoformat()
            for j, asset in enumerate(r.assets):
                cap = r.caps[t, j] if r.caps is not None else None
                rows.append([date, r.strategy, asset, r.target_weights[t, j], r.drifted_weights[t, j], cap])
    tables.append(Table("weights", ("date", "strategy", "asset", "target", "drifted", "cap"), rows))

    rows = []
    for r in records:
        wealth = cumulative_wealth(r.daily_returns, r.return_mode)[1:]
        for d, ret, w in zip(r.dates, r.daily_returns, wealth):
            rows.append([d.isoformat(), r.strategy, ret, w])
    tables.append(Table("returns", ("date", "strategy", "return", "wealth"), rows))

    if len(records) >= 2:
        rows = []
        for i, ri in enumerate(records):
            for j, rj in enumerate(records):
                if i == j:
                    continue
                # lower triangle: Sharpe ratio, upper triangle: certainty equivalent
                metric = "SR" if i > j else "CEQ"
                res = lw_pairwise_test(
                    ri.daily_returns, rj.daily_returns, metric, bt.gamma, kernel=cfg.kernel, bandwidth=cfg.bandwidth
                )
                rows.append([ri.strategy, rj.strategy, metric, res.difference, res.statistic, res.p_value,
                             significance_tier(res.p_value), res.degenerate])
        cols = ("row", "column", "metric", "difference", "statistic", "p_value", "tier", "degenerate")
        tables.append(Table("pvalues", cols, rows))
    return tables


def _rebalance_windows(cfg: RunConfig, panel):
    """``(date, first_row)`` of each estimation window selected for the frontier."""
    k_len, step = cfg.backtest.window_k_days, cfg.backtest.rebalance_days
    p = panel.n_days
    if p < k_len + step:
        raise ConfigError(f"panel has {p} days; need at least K + k = {k_len + step}")
    starts = list(range(0, p - k_len - step + 1, step))
    windows = [(panel.dates[s + k_len], s) for s in starts]
    sel = cfg.frontier.dates
    if sel == "last":
        return windows[-1:]
    if sel == "all":
        return windows
    by_date = {d.isoformat(): (d, s) for d, s in windows}
    missing = [d for d in sel if d not in by_date]
    if missing:
        raise ConfigError(f"frontier.dates {missing} are not rebalance dates")
    return [by_date[d] for d in sel]


def cmd_frontier(cfg: RunConfig) -> list[Table]:
    """Efficient frontiers per rebalance date for each configured universe."""
    panel, volumes = _load(cfg)
    fs = cfg.frontier
    k_len = cfg.backtest.window_k_days
    classes = np.array(panel.asset_class)
    liquid = np.array(panel.liquid, dtype=bool)
    x_all = np.asarray(panel.values)
    rows = []
    for date, s in _rebalance_windows(cfg, panel):
        x = x_all[s : s + k_len]
        for universe in fs.universes:
            idx = np.arange(panel.n_assets)
            caps = None
            if universe == "traditional":
                idx = np.flatnonzero(classes == "traditional")
                if idx.size == 0:
                    continue
            elif universe == "libro":
                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    caps = compute_caps(np.asarray(volumes.values)[s : s + k_len], cfg.liquidity, liquid).caps
            fr = trace_frontier(x[:, idx], fs.risk_measure, fs.grid_size, caps, alpha=cfg.backtest.alpha)
            for g, (r, risk, w) in enumerate(fr.points):
                for j, i in enumerate(idx):
                    rows.append([date.isoformat(), universe, g, r, risk, panel.assets[i], w[j]])
    cols = ("date", "universe", "point", "target_return", "risk", "asset", "weight")
    return [Table("frontier", cols, rows)]


def cmd_spanning(cfg: RunConfig) -> list[Table]:
    """Spanning tests of each crypto asset against the traditional assets."""
    panel, _ = _load(cfg)
    classes = np.array(panel.asset_class)
    bench = np.flatnonzero(classes == "traditional")
    cand = np.flatnonzero(classes == "crypto")
    if bench.size < 2:
        raise AllocBenchError(f"spanning tests need at least 2 benchmark (traditional) assets, found {bench.size}")
    x = np.asarray(panel.values)
    rows = []
    for i in cand:
        res = spanning_tests(x[:, bench], x[:, i])
        rows.append([panel.assets[i], res.alpha, res.beta_sum, res.f_hk, res.p_hk, res.f1, res.p1, res.f2, res.p2,
                     res.rejects(0.1)])
    cols = ("asset", "alpha", "beta_sum", "F_HK", "p_HK", "F1", "p1", "F2", "p2", "flagged")
    return [Table("spanning", cols, rows)]


def cmd_describe(cfg: RunConfig) -> list[Table]:
    """Per-asset descriptive statistics of the return panel."""
    panel, _ = _load(cfg)
    st = descriptive_stats(panel)
    rows = []
    for i, a in enumerate(panel.assets):
        rows.append([a, panel.asset_class[i], panel.liquid[i], st.n_obs, st.mean[i], st.std[i], st.skewness[i],
                     st.excess_kurtosis[i], st.minimum[i], st.maximum[i]])
    cols = ("asset", "class", "liquid", "n_obs", "mean", "std", "skewness", "excess_kurtosis", "min", "max")
    return [Table("describe", cols, rows)]


def cmd_combine(cfg: RunConfig) -> list[Table]:
    """Naive and bootstrap combinations on the most recent estimation window."""
    panel, volumes = _load(cfg)
    bt = cfg.backtest
    k_len = bt.window_k_days
    if panel.n_days < k_len:
        raise ConfigError(f"panel has {panel.n_days} days; the window needs {k_len}")
    x = np.asarray(panel.values)[-k_len:]
    caps = None
    if bt.libro is not None:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            caps = compute_caps(np.asarray(volumes.values)[-k_len:], bt.libro, np.array(panel.liquid)).caps
    est = estimate_moments(x)
    t_index = (panel.n_days - k_len) // bt.rebalance_days
    seed = int(np.random.SeedSequence([bt.seed, t_index]).generate_state(1)[0])
    members = list(bt.comb_members)
    weights = []
    for m in members:
        try:
            weights.append(make_solver(m, alpha=bt.alpha, seed=seed, md_restarts=bt.md_restarts)(x, est, caps))
        except NoPositiveReturnError:
            weights.append(solve_min_var(est, caps) if m == "MV-S" and bt.mvs_fallback == "MinVar" else None)
        except (AllocBenchError, ValueError, ArithmeticError, np.linalg.LinAlgError):
            weights.append(None)
    ok = [w for w in weights if w is not None]
    if not ok:
        raise AllocBenchError("every combined model failed on the estimation window")
    naive = combine_naive(ok)
    solvers = [
        make_solver(m, alpha=bt.alpha, md_restarts=bt.md_restarts, md_warm_restarts=bt.md_warm_restarts)
        for m in members
    ]
    if len(members) >= 2:
        shares, comb = combine_bootstrap(
            solvers, x, bt.bootstrap, caps, est=est, window_index=t_index, original_weights=weights
        )
        pi, votes, fails, block = shares.pi, shares.votes, shares.failures, shares.block_length
    else:
        comb, pi, votes, fails, block = ok[0], np.ones(1), np.zeros(1, int), np.zeros(1, int), math.nan
    share_rows = [
        [m, weights[i] is not None, pi[i], votes[i], fails[i], block] for i, m in enumerate(members)
    ]
    weight_rows = []
    for name, w in [*zip(members, weights), ("CombNaive", naive), ("Comb", comb)]:
        if w is None:
            continue
        weight_rows += [[name, a, w[j]] for j, a in enumerate(panel.assets)]
    return [
        Table("shares", ("model", "available", "share", "votes", "failures", "block_length"), share_rows),
        Table("combine_weights", ("model", "asset", "weight"), weight_rows),
    ]


HANDLERS = {
    "backtest": cmd_backtest,
    "frontier": cmd_frontier,
    "spanning": cmd_spanning,
    "describe": cmd_describe,
    "combine": cmd_combine,
}


# --------------------------------------------------------------------------
# entry point
# --------------------------------------------------------------------------


def _seed(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="allocbench", description="Long-only allocation backtests and reports.")
    parser.add_argument("--version", action="version", version=f"allocbench {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="INI configuration file")
    common.add_argument("--seed", type=_seed, help="root seed for the backtest and the bootstrap combination")
    common.add_argument("--libro", action="store_true", default=None, help="apply volume-based weight caps")
    common.add_argument("--rebalance", help="daily, weekly, monthly or a number of days")
    common.add_argument("--allow-any-k", action="store_true", default=None, help="accept any rebalance interval")
    common.add_argument("--format", choices=("csv", "json"), help="report format")
    common.add_argument("--drop-incomplete-assets", action="store_true", default=None,
                        help="drop assets with missing cells instead of failing")
    common.add_argument("--returns", help="returns CSV (overrides data.returns)")
    common.add_argument("--volumes", help="volumes CSV (overrides data.volumes)")
    common.add_argument("--metadata", help="asset metadata CSV (overrides data.metadata)")
    common.add_argument("--output", help="output directory (overrides output.dir)")
    common.add_argument("--n-jobs", help="worker processes for the backtest, or 'auto'")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common], help=HANDLERS[name].__doc__.splitlines()[0])
    return parser


def _overrides(args) -> dict:
    def path(p):
        return None if p is None else os.path.abspath(p)

    def flag(v):
        return None if v is None else "true"

    rebalance = args.rebalance
    if rebalance is not None and rebalance.lower() in REBALANCE_NAMES:
        rebalance = rebalance.lower()
    return {
        "data": {
            "returns": path(args.returns),
            "volumes": path(args.volumes),
            "metadata": path(args.metadata),
            "drop_incomplete_assets": flag(args.drop_incomplete_assets),
        },
        "backtest": {
            "seed": args.seed,
            "rebalance": rebalance,
            "allow_any_k": flag(args.allow_any_k),
            "n_jobs": args.n_jobs,
        },
        # one seed drives both the backtest and the bootstrap resamples
        "comb": {"seed": args.seed},
        "libro": {"enabled": flag(args.libro)},
        "output": {"dir": path(args.output), "format": args.format},
    }


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config, _overrides(args))
    except ConfigError as exc:
        print(f"allocbench: configuration error: {exc}", file=sys.stderr)
        return 1
    try:
        tables = HANDLERS[args.command](cfg)
    except ConfigError as exc:
        print(f"allocbench: configuration error: {exc}", file=sys.stderr)
        return 1
    except (AllocBenchError, ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"allocbench: {args.command} failed: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    try:
        paths = write_tables(tables, args.command, cfg)
    except OSError as exc:
        print(f"allocbench: cannot write reports: {exc}", file=sys.stderr)
        return 2
    for p in paths:
        print(p)
    return 0
