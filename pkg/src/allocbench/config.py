"""Run configuration: INI files, command-line overrides and resolution.

A configuration file has the sections ``[data]``, ``[backtest]``,
``[libro]``, ``[comb]``, ``[frontier]``, ``[inference]`` and ``[output]``;
every key is optional except ``data.returns``.  Relative paths are taken
relative to the directory of the file.  :func:`load_config` merges the
built-in defaults, the file and any overrides, validates the result and
returns a :class:`RunConfig` whose :meth:`RunConfig.echo` reproduces it as
INI text.
"""

from __future__ import annotations

import configparser
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

from .backtest import ALL_STRATEGIES, RETURN_MODES, BacktestConfig
from .combination import BootstrapConfig
from .exceptions import ConfigError
from .inference import KERNELS
from .liquidity import LiquiditySpec
from .strategies import STRATEGIES

__all__ = [
    "DEFAULTS",
    "REBALANCE_NAMES",
    "FrontierSettings",
    "RunConfig",
    "load_config",
    "parse_rebalance",
]

REBALANCE_NAMES = {"daily": 1, "weekly": 5, "monthly": 21}
STANDARD_K = tuple(REBALANCE_NAMES.values())
FORMATS = ("csv", "json")
UNIVERSES = ("traditional", "all", "libro")

# every recognised key with its default; "" means unset
DEFAULTS = {
    "data": {
        "returns": "",
        "volumes": "",
        "metadata": "",
        "drop_incomplete_assets": "false",
    },
    "backtest": {
        "window_days": "252",
        "rebalance": "monthly",
        "allow_any_k": "false",
        "strategies": ",".join(ALL_STRATEGIES),
        "alpha": "0.05",
        "gamma": "1.0",
        "seed": "0",
        "return_mode": "linear",
        "md_restarts": "10",
        "md_warm_restarts": "1",
        "mvs_fallback": "none",
        "n_jobs": "1",
    },
    "libro": {
        "enabled": "false",
        "investment_sum_usd": "1e7",
        "volume_fraction": "0.01",
        "lookback_days": "window",
    },
    "comb": {
        "members": ",".join(STRATEGIES),
        "B": "100",
        "seed": "",
        "gamma": "",
        "block": "auto",
    },
    "frontier": {
        "risk_measure": "variance",
        "grid_size": "50",
        "dates": "all",
        "universes": "auto",
    },
    "inference": {
        "kernel": "parzen",
        "bandwidth": "auto",
    },
    "output": {
        "dir": "allocbench-out",
        "format": "csv",
    },
}

_TRUE = ("1", "true", "yes", "on")
_FALSE = ("0", "false", "no", "off")


def parse_rebalance(value, allow_any_k: bool = False) -> int:
    """Holding period in days from ``daily|weekly|monthly`` or an integer."""
    text = str(value).strip().lower()
    if text in REBALANCE_NAMES:
        return REBALANCE_NAMES[text]
    try:
        k = int(text)
    except ValueError:
        raise ConfigError(f"rebalance must be daily, weekly, monthly or an integer, got {value!r}") from None
    if k < 1:
        raise ConfigError("rebalance must be at least one day")
    if k not in STANDARD_K and not allow_any_k:
        raise ConfigError(f"rebalance of {k} days is not one of {STANDARD_K}; pass --allow-any-k to permit it")
    return k


@dataclass(frozen=True)
class FrontierSettings:
    """Settings of the ``frontier`` command.

    ``dates`` is ``"all"``, ``"last"`` or a tuple of ISO dates picking
    rebalance dates; ``universes`` lists the asset sets to trace.
    """

    risk_measure: str = "variance"
    grid_size: int = 50
    dates: str | tuple = "all"
    universes: tuple = ("traditional", "all")


@dataclass(frozen=True)
class RunConfig:
    """Fully resolved settings of one command-line run."""

    returns: Path
    volumes: Path | None
    metadata: Path | None
    drop_incomplete_assets: bool
    backtest: BacktestConfig
    liquidity: LiquiditySpec
    libro_enabled: bool
    frontier: FrontierSettings
    kernel: str
    bandwidth: float | None
    output_dir: Path
    formats: tuple
    settings: dict = field(repr=False, compare=False, default_factory=dict)

    def echo(self) -> str:
        """The resolved settings as INI text (loadable by :func:`load_config`)."""
        lines = []
        for section, items in self.settings.items():
            lines.append(f"[{section}]")
            lines.extend(f"{k} = {v}" for k, v in items.items())
        return "\n".join(lines)


# --------------------------------------------------------------------------
# typed readers
# --------------------------------------------------------------------------


def _key(section, key):
    return f"{section}.{key}"


def _bool(s, section, key):
    v = s[section][key].strip().lower()
    if v in _TRUE:
        return True
    if v in _FALSE:
        return False
    raise ConfigError(f"{_key(section, key)} must be a boolean, got {v!r}")


def _int(s, section, key, lo=None, hi=None):
    v = s[section][key].strip()
    try:
        out = int(v)
    except ValueError:
        raise ConfigError(f"{_key(section, key)} must be an integer, got {v!r}") from None
    if (lo is not None and out < lo) or (hi is not None and out > hi):
        raise ConfigError(f"{_key(section, key)} = {out} is out of range")
    return out


def _float(s, section, key):
    v = s[section][key].strip()
    try:
        out = float(v)
    except ValueError:
        raise ConfigError(f"{_key(section, key)} must be a number, got {v!r}") from None
    if not math.isfinite(out):
        raise ConfigError(f"{_key(section, key)} must be finite")
    return out


def _names(s, section, key):
    return tuple(x.strip() for x in s[section][key].split(",") if x.strip())


def _path(value, base: Path, must_exist: bool, what: str) -> Path | None:
    value = value.strip()
    if not value:
        return None
    p = Path(value).expanduser()
    if not p.is_absolute():
        p = base / p
    p = Path(os.path.abspath(p))
    if must_exist and not p.is_file():
        raise ConfigError(f"{what} file not found: {p}")
    return p


# --------------------------------------------------------------------------
# loading
# --------------------------------------------------------------------------


def _read_file(path: Path) -> dict:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with path.open(encoding="utf-8") as fh:
            parser.read_file(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return {sec: dict(parser[sec]) for sec in parser.sections()}


def _merge(settings, extra, origin):
    for section, items in extra.items():
        if section not in DEFAULTS:
            raise ConfigError(f"{origin}: unknown section [{section}]")
        for key, value in items.items():
            if value is None:
                continue
            if key not in DEFAULTS[section]:
                raise ConfigError(f"{origin}: unknown key {_key(section, key)}")
            settings[section][key] = str(value)


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    """Resolve defaults, an optional INI file and overrides into a RunConfig.

    Parameters
    ----------
    path : path-like, optional
        INI file.
    overrides : dict, optional
        ``{section: {key: value}}``; ``None`` values are ignored.  Relative
        paths given here are taken relative to the working directory.

    Raises
    ------
    ConfigError
        Unknown keys, malformed values, or referenced files that do not exist.
    """
    settings = {sec: dict(items) for sec, items in DEFAULTS.items()}
    base = Path.cwd()
    if path is not None:
        path = Path(path)
        file_settings = _read_file(path)
        _merge(settings, file_settings, str(path))
        base = path.resolve().parent
        # file paths relative to the config file
        for key in ("returns", "volumes", "metadata"):
            if file_settings.get("data", {}).get(key, "").strip():
                settings["data"][key] = str(_path(settings["data"][key], base, False, key))
        out_dir = file_settings.get("output", {}).get("dir", "").strip()
        if out_dir:
            settings["output"]["dir"] = str(_path(out_dir, base, False, "output"))
    if overrides:
        _merge(settings, overrides, "override")
    return _resolve(settings)


def _resolve(s) -> RunConfig:
    cwd = Path.cwd()
    d = s["data"]
    if not d["returns"].strip():
        raise ConfigError("no returns file configured (data.returns or --returns)")
    returns = _path(d["returns"], cwd, True, "returns")
    volumes = _path(d["volumes"], cwd, True, "volumes")
    metadata = _path(d["metadata"], cwd, True, "metadata")
    d["returns"] = str(returns)
    d["volumes"] = "" if volumes is None else str(volumes)
    d["metadata"] = "" if metadata is None else str(metadata)
    drop = _bool(s, "data", "drop_incomplete_assets")

    # liquidity caps
    libro_enabled = _bool(s, "libro", "enabled")
    lookback_txt = s["libro"]["lookback_days"].strip().lower()
    lookback = None if lookback_txt in ("window", "", "none") else _int(s, "libro", "lookback_days", lo=1)
    try:
        liquidity = LiquiditySpec(
            investment_sum=_float(s, "libro", "investment_sum_usd"),
            volume_fraction=_float(s, "libro", "volume_fraction"),
            lookback=lookback,
        )
    except ConfigError as exc:
        raise ConfigError(f"[libro] {exc}") from None
    if libro_enabled and volumes is None:
        raise ConfigError("liquidity caps are enabled but no volumes file is configured (data.volumes or --volumes)")

    # backtest
    b = s["backtest"]
    allow_any_k = _bool(s, "backtest", "allow_any_k")
    k = parse_rebalance(b["rebalance"], allow_any_k)
    seed = _int(s, "backtest", "seed", lo=0, hi=2**64 - 1)
    gamma = _float(s, "backtest", "gamma")
    n_jobs_txt = b["n_jobs"].strip().lower()
    n_jobs = (os.cpu_count() or 1) if n_jobs_txt == "auto" else _int(s, "backtest", "n_jobs", lo=1)
    fallback = b["mvs_fallback"].strip()
    if fallback.lower() in ("", "none"):
        fallback = None
    if b["return_mode"] not in RETURN_MODES:
        raise ConfigError(f"backtest.return_mode must be one of {RETURN_MODES}")

    c = s["comb"]
    comb_seed = seed if not c["seed"].strip() else _int(s, "comb", "seed", lo=0, hi=2**64 - 1)
    comb_gamma = gamma if not c["gamma"].strip() else _float(s, "comb", "gamma")
    block_txt = c["block"].strip().lower()
    block = "auto" if block_txt == "auto" else _float(s, "comb", "block")
    try:
        boot = BootstrapConfig(B=_int(s, "comb", "B", lo=1), seed=comb_seed, gamma=comb_gamma, block=block)
        bt = BacktestConfig(
            window_k_days=_int(s, "backtest", "window_days", lo=2),
            rebalance_days=k,
            strategies=_names(s, "backtest", "strategies"),
            comb_members=_names(s, "comb", "members"),
            libro=liquidity if libro_enabled else None,
            alpha=_float(s, "backtest", "alpha"),
            gamma=gamma,
            seed=seed,
            bootstrap=boot,
            md_restarts=_int(s, "backtest", "md_restarts", lo=1),
            md_warm_restarts=_int(s, "backtest", "md_warm_restarts", lo=1),
            return_mode=b["return_mode"],
            mvs_fallback=fallback,
            n_jobs=n_jobs,
        )
    except ConfigError as exc:
        raise ConfigError(f"[backtest/comb] {exc}") from None
    b["rebalance"] = str(k)
    b["n_jobs"] = str(n_jobs)
    b["mvs_fallback"] = fallback or "none"
    c["seed"] = str(comb_seed)
    c["gamma"] = repr(comb_gamma)
    s["libro"]["lookback_days"] = "window" if lookback is None else str(lookback)

    # frontier
    f = s["frontier"]
    measure = f["risk_measure"].strip().lower()
    if measure not in ("variance", "cvar"):
        raise ConfigError("frontier.risk_measure must be variance or cvar")
    dates_txt = f["dates"].strip().lower()
    dates = dates_txt if dates_txt in ("all", "last") else _names(s, "frontier", "dates")
    uni_txt = f["universes"].strip().lower()
    if uni_txt == "auto":
        universes = ("traditional", "all") + (("libro",) if volumes is not None else ())
    else:
        universes = _names(s, "frontier", "universes")
        bad = [u for u in universes if u not in UNIVERSES]
        if bad or not universes:
            raise ConfigError(f"frontier.universes must be drawn from {UNIVERSES}, got {f['universes']!r}")
        if "libro" in universes and volumes is None:
            raise ConfigError("the libro frontier universe needs a volumes file")
    f["universes"] = ",".join(universes)
    frontier = FrontierSettings(measure, _int(s, "frontier", "grid_size", lo=2), dates, universes)

    # inference
    kernel = s["inference"]["kernel"].strip().lower()
    if kernel not in KERNELS:
        raise ConfigError(f"inference.kernel must be one of {tuple(KERNELS)}")
    bw_txt = s["inference"]["bandwidth"].strip().lower()
    bandwidth = None if bw_txt == "auto" else _float(s, "inference", "bandwidth")
    if bandwidth is not None and bandwidth <= 0:
        raise ConfigError("inference.bandwidth must be positive")

    # output
    formats = _names(s, "output", "format")
    if not formats or any(fmt not in FORMATS for fmt in formats):
        raise ConfigError(f"output.format must be drawn from {FORMATS}")
    out_dir = _path(s["output"]["dir"], cwd, False, "output")
    s["output"]["dir"] = str(out_dir)

    return RunConfig(
        returns=returns,
        volumes=volumes,
        metadata=metadata,
        drop_incomplete_assets=drop,
        backtest=bt,
        liquidity=liquidity,
        libro_enabled=libro_enabled,
        frontier=frontier,
        kernel=kernel,
        bandwidth=bandwidth,
        output_dir=out_dir,
        formats=tuple(dict.fromkeys(formats)),
        settings=s,
    )
