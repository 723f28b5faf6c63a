"""Loading, validation and description of daily return and volume panels.

Panels are plain CSV files::

    date,BTC,ETH,SPX
    2016-01-04,0.0123,-0.0051,0.0007
    ...

The first column holds ISO-8601 dates (strictly increasing), the remaining
columns one asset each.  Return panels hold daily natural-log returns, volume
panels daily traded volume in USD.
"""

from __future__ import annotations

import csv
import datetime as dt
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .exceptions import DataError

ASSET_CLASSES = ("traditional", "crypto")


def _frozen(values) -> np.ndarray:
    arr = np.array(values, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ReturnsPanel:
    """P x N matrix of daily log returns with dates and asset metadata."""

    dates: tuple[dt.date, ...]
    assets: tuple[str, ...]
    values: np.ndarray
    asset_class: tuple[str, ...] = ()
    liquid: tuple[bool, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "assets", tuple(self.assets))
        object.__setattr__(self, "values", _frozen(self.values))
        n = len(self.assets)
        if not self.asset_class:
            object.__setattr__(self, "asset_class", ("traditional",) * n)
        if not self.liquid:
            object.__setattr__(self, "liquid", (False,) * n)
        object.__setattr__(self, "asset_class", tuple(self.asset_class))
        object.__setattr__(self, "liquid", tuple(bool(x) for x in self.liquid))
        _check_panel(self, min_rows=2, min_cols=2, nonnegative=False)
        if len(self.asset_class) != n or len(self.liquid) != n:
            raise DataError("asset metadata length does not match the number of assets")
        bad = sorted(set(self.asset_class) - set(ASSET_CLASSES))
        if bad:
            raise DataError(f"unknown asset class(es) {bad}; expected one of {ASSET_CLASSES}")

    @property
    def n_days(self) -> int:
        return self.values.shape[0]

    @property
    def n_assets(self) -> int:
        return self.values.shape[1]

    def select(self, assets: Sequence[str]) -> "ReturnsPanel":
        """Sub-panel restricted to ``assets`` (in the given order)."""
        idx = [self.assets.index(a) for a in assets]
        return ReturnsPanel(
            self.dates,
            [self.assets[i] for i in idx],
            self.values[:, idx],
            [self.asset_class[i] for i in idx],
            [self.liquid[i] for i in idx],
        )

    def of_class(self, asset_class: str) -> list[str]:
        return [a for a, c in zip(self.assets, self.asset_class) if c == asset_class]


@dataclass(frozen=True)
class VolumePanel:
    """P x N matrix of daily traded volume (USD), aligned with a ReturnsPanel."""

    dates: tuple[dt.date, ...]
    assets: tuple[str, ...]
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dates", tuple(self.dates))
        object.__setattr__(self, "assets", tuple(self.assets))
        object.__setattr__(self, "values", _frozen(self.values))
        _check_panel(self, min_rows=1, min_cols=1, nonnegative=True)

    def select(self, assets: Sequence[str]) -> "VolumePanel":
        idx = [self.assets.index(a) for a in assets]
        return VolumePanel(self.dates, [self.assets[i] for i in idx], self.values[:, idx])


@dataclass(frozen=True)
class DescriptiveStats:
    """Per-asset sample moments of daily log returns."""

    assets: tuple[str, ...]
    mean: np.ndarray
    std: np.ndarray
    skewness: np.ndarray
    excess_kurtosis: np.ndarray
    minimum: np.ndarray
    maximum: np.ndarray
    n_obs: int = field(default=0)

    def rows(self):
        """Yield one ``dict`` per asset, convenient for tabular output."""
        for i, a in enumerate(self.assets):
            yield {
                "asset": a,
                "mean": self.mean[i],
                "std": self.std[i],
                "skewness": self.skewness[i],
                "excess_kurtosis": self.excess_kurtosis[i],
                "min": self.minimum[i],
                "max": self.maximum[i],
            }


def _check_panel(panel, *, min_rows, min_cols, nonnegative):
    values = panel.values
    kind = type(panel).__name__
    if values.ndim != 2 or values.shape != (len(panel.dates), len(panel.assets)):
        raise DataError(
            f"{kind}: values shape {values.shape} does not match "
            f"{len(panel.dates)} dates x {len(panel.assets)} assets"
        )
    if values.shape[0] < min_rows or values.shape[1] < min_cols:
        raise DataError(f"{kind}: need at least {min_rows} dates and {min_cols} assets, got {values.shape}")
    if len(set(panel.assets)) != len(panel.assets):
        raise DataError(f"{kind}: duplicate asset identifiers")
    for prev, cur in zip(panel.dates, panel.dates[1:]):
        if cur == prev:
            raise DataError(f"{kind}: duplicate date {cur.isoformat()}")
        if cur < prev:
            raise DataError(f"{kind}: dates not increasing at {cur.isoformat()} (after {prev.isoformat()})")
    if not np.all(np.isfinite(values)):
        r, c = np.argwhere(~np.isfinite(values))[0]
        raise DataError(f"{kind}: non-finite value at {panel.dates[r].isoformat()}, asset {panel.assets[c]}")
    if nonnegative and np.any(values < 0):
        r, c = np.argwhere(values < 0)[0]
        raise DataError(f"{kind}: negative volume at {panel.dates[r].isoformat()}, asset {panel.assets[c]}")


def _read_csv(path):
    """Parse a panel CSV into (dates, assets, cells) without validating cells."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"file not found: {path}")
    with path.open(newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r and not (len(r) == 1 and not r[0].strip())]
    if not rows:
        raise DataError(f"{path}: empty file")
    header = [h.strip() for h in rows[0]]
    if len(header) < 2:
        raise DataError(f"{path}: header must be 'date,asset1,...'")
    assets = header[1:]
    dates, cells = [], []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise DataError(f"{path}:{lineno}: expected {len(header)} fields, found {len(row)}")
        try:
            dates.append(dt.date.fromisoformat(row[0].strip()))
        except ValueError:
            raise DataError(f"{path}:{lineno}: invalid ISO-8601 date {row[0]!r}") from None
        cells.append([c.strip() for c in row[1:]])
    return path, dates, assets, cells


def _where(path, date, asset):
    return f"{path}: date {date.isoformat()}, asset {asset}"


def _parse_cells(path, dates, assets, cells, drop_incomplete):
    """Convert string cells to floats; return (values, assets_to_drop)."""
    values = np.empty((len(dates), len(assets)))
    bad_cols = set()
    for i, row in enumerate(cells):
        for j, cell in enumerate(row):
            if cell == "":
                if drop_incomplete:
                    bad_cols.add(assets[j])
                    values[i, j] = np.nan
                    continue
                raise DataError(f"missing cell at {_where(path, dates[i], assets[j])}")
            try:
                v = float(cell)
            except ValueError:
                raise DataError(f"non-numeric cell {cell!r} at {_where(path, dates[i], assets[j])}") from None
            if not math.isfinite(v):
                if drop_incomplete:
                    bad_cols.add(assets[j])
                    values[i, j] = np.nan
                    continue
                raise DataError(f"non-finite cell {cell!r} at {_where(path, dates[i], assets[j])}")
            values[i, j] = v
    return values, bad_cols


def load_asset_metadata(path) -> dict[str, dict]:
    """Read ``asset,class[,liquid]`` rows into ``{asset: {"class": .., "liquid": ..}}``."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"file not found: {path}")
    out = {}
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "asset" not in reader.fieldnames or "class" not in reader.fieldnames:
            raise DataError(f"{path}: metadata header must contain 'asset' and 'class'")
        for row in reader:
            liquid = str(row.get("liquid") or "").strip().lower() in ("1", "true", "yes", "y")
            out[row["asset"].strip()] = {"class": row["class"].strip(), "liquid": liquid}
    return out


def load_panel(
    returns_path,
    volumes_path=None,
    *,
    metadata: Mapping[str, Mapping] | None = None,
    drop_incomplete_assets: bool = False,
) -> tuple[ReturnsPanel, VolumePanel | None]:
    """Load a return panel and, optionally, an aligned volume panel.

    Parameters
    ----------
    returns_path, volumes_path : path-like
        CSV files with header ``date,asset1,...``.
    metadata : mapping, optional
        ``{asset: {"class": "crypto" | "traditional", "liquid": bool}}``.
        Assets missing from the mapping default to traditional, not liquid.
    drop_incomplete_assets : bool
        Remove assets with empty or non-finite cells instead of raising.

    Returns
    -------
    (ReturnsPanel, VolumePanel or None)
    """
    path, dates, assets, cells = _read_csv(returns_path)
    values, bad = _parse_cells(path, dates, assets, cells, drop_incomplete_assets)

    vol = None
    if volumes_path is not None:
        vpath, vdates, vassets, vcells = _read_csv(volumes_path)
        missing = [a for a in assets if a not in vassets]
        if missing:
            raise DataError(f"panel misalignment: assets {missing} have returns but no volumes in {vpath}")
        if vdates != dates:
            raise DataError(f"panel misalignment: dates in {vpath} differ from {path}")
        vvalues, vbad = _parse_cells(vpath, vdates, vassets, vcells, drop_incomplete_assets)
        bad |= vbad & set(assets)
        vol = (vdates, vassets, vvalues)

    keep = [a for a in assets if a not in bad]
    if len(keep) < len(assets):
        warnings.warn(f"dropping incomplete assets {sorted(bad)}", stacklevel=2)
    idx = [assets.index(a) for a in keep]
    metadata = metadata or {}
    classes = [metadata.get(a, {}).get("class", "traditional") for a in keep]
    liquid = [bool(metadata.get(a, {}).get("liquid", False)) for a in keep]
    panel = ReturnsPanel(dates, keep, values[:, idx], classes, liquid)

    volumes = None
    if vol is not None:
        vdates, vassets, vvalues = vol
        vidx = [vassets.index(a) for a in keep]
        volumes = VolumePanel(vdates, keep, vvalues[:, vidx])
    return panel, volumes


def write_panel(panel, path) -> None:
    """Write a panel to CSV so that reloading gives bit-identical values."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["date", *panel.assets])
        for d, row in zip(panel.dates, panel.values):
            w.writerow([d.isoformat(), *(repr(float(v)) for v in row)])


def write_metadata(panel, path) -> None:
    """Write the ``asset,class,liquid`` table read by :func:`load_asset_metadata`."""
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["asset", "class", "liquid"])
        for a, c, q in zip(panel.assets, panel.asset_class, panel.liquid):
            w.writerow([a, c, "true" if q else "false"])


def sample_moments(x: np.ndarray, axis: int = 0):
    """Mean, sd (ddof=1), skewness and excess kurtosis (1/P central moments).

    Zero-variance columns get skewness and excess kurtosis 0.
    """
    x = np.asarray(x, dtype=float)
    mean = x.mean(axis=axis)
    dev = x - np.expand_dims(mean, axis)
    m2 = np.mean(dev**2, axis=axis)
    m3 = np.mean(dev**3, axis=axis)
    m4 = np.mean(dev**4, axis=axis)
    n = x.shape[axis]
    sd = np.sqrt(m2 * n / (n - 1)) if n > 1 else np.zeros_like(m2)
    # relative threshold: constant columns produce m2 at round-off level
    scale = np.maximum(np.mean(x**2, axis=axis), np.finfo(float).tiny)
    degenerate = m2 <= 1e-28 * scale
    with np.errstate(divide="ignore", invalid="ignore"):
        skew = np.where(degenerate, 0.0, m3 / np.where(degenerate, 1.0, m2) ** 1.5)
        kurt = np.where(degenerate, 0.0, m4 / np.where(degenerate, 1.0, m2) ** 2 - 3.0)
    sd = np.where(degenerate, 0.0, sd)
    return mean, sd, skew, kurt


def descriptive_stats(panel: ReturnsPanel) -> DescriptiveStats:
    """Per-asset mean, sd, skewness, excess kurtosis, min and max."""
    x = panel.values
    if x.shape[0] < 4:
        raise DataError(f"descriptive statistics need at least 4 observations, got {x.shape[0]}")
    mean, sd, skew, kurt = sample_moments(x)
    lo, hi = x.min(axis=0), x.max(axis=0)
    return DescriptiveStats(
        assets=panel.assets,
        mean=np.clip(mean, lo, hi),  # summation round-off on constant columns
        std=sd,
        skewness=skew,
        excess_kurtosis=kurt,
        minimum=lo,
        maximum=hi,
        n_obs=x.shape[0],
    )
