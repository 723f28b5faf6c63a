import sys

import numpy as np
import pytest
from hypothesis import strategies as st

from allocbench.synthetic import synthetic_panel


def random_cov(rng, n, nonneg_corr=False):
    """Random positive-definite covariance with log-uniform volatilities."""
    a = rng.uniform(0, 1, (n, n)) if nonneg_corr else rng.normal(size=(n, n))
    s = a @ a.T + 0.1 * np.eye(n)
    d = 1 / np.sqrt(np.diag(s))
    vols = 10 ** rng.uniform(-2.5, -1.0, n)
    return (s * np.outer(d, d)) * np.outer(vols, vols)


def grid_simplex(n, step=0.01, caps=None):
    """All points of the simplex grid with spacing ``step`` (n <= 3)."""
    m = int(round(1 / step))
    if n == 1:
        pts = np.ones((1, 1))
    elif n == 2:
        a = np.arange(m + 1) / m
        pts = np.column_stack([a, 1 - a])
    else:
        i, j = np.meshgrid(np.arange(m + 1), np.arange(m + 1), indexing="ij")
        keep = i + j <= m
        a, b = i[keep] / m, j[keep] / m
        pts = np.column_stack([a, b, np.clip(1 - a - b, 0, None)])
    if caps is not None:
        pts = pts[np.all(pts <= np.asarray(caps) + 1e-12, axis=1)]
    return pts


seeds = st.integers(min_value=0, max_value=2**32 - 1)


@pytest.fixture(scope="session")
def small_panel():
    return synthetic_panel(3, 2, 400, seed=7)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
