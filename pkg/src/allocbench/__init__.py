"""Rolling-window backtests of long-only portfolio allocation rules.

The package covers panel loading, moment estimation, seven allocation
strategies, liquidity-bounded weight caps, naive and bootstrap-vote model
combination, the backtest engine, performance and diversification metrics,
pairwise Sharpe/CEQ tests with HAC inference, spanning tests and efficient
frontiers.
"""

__version__ = "0.1.0"

from .backtest import ALL_STRATEGIES, COMBINATIONS, BacktestConfig, BacktestRecord, run_backtest
from .combination import BootstrapConfig, ModelShares, combine_bootstrap, combine_naive
from .data import DescriptiveStats, ReturnsPanel, VolumePanel, descriptive_stats, load_panel, write_panel
from .estimation import MomentEstimates, empirical_var_cvar, estimate_moments
from .exceptions import (
    AllocBenchError,
    ConfigError,
    ConvergenceError,
    DataError,
    InfeasibleError,
    NoPositiveReturnError,
    NumericalWarning,
    SolverError,
)
from .frontier import Frontier, trace_frontier
from .inference import (
    PairwiseTest,
    PairwiseTestMatrix,
    SpanningResult,
    lw_pairwise_test,
    pairwise_test_matrix,
    spanning_tests,
)
from .liquidity import BoundsSpec, LiquiditySpec, compute_caps
from .metrics import diversification_metrics, performance_metrics, turnover_metrics
from .strategies import (
    STRATEGIES,
    solve_erc,
    solve_ew,
    solve_max_pdi,
    solve_max_return,
    solve_max_sharpe,
    solve_min_cvar,
    solve_min_var,
    solve_strategy,
)

__all__ = [
    "ALL_STRATEGIES",
    "COMBINATIONS",
    "STRATEGIES",
    "AllocBenchError",
    "BacktestConfig",
    "BacktestRecord",
    "BootstrapConfig",
    "BoundsSpec",
    "ConfigError",
    "ConvergenceError",
    "DataError",
    "DescriptiveStats",
    "Frontier",
    "InfeasibleError",
    "LiquiditySpec",
    "ModelShares",
    "MomentEstimates",
    "NoPositiveReturnError",
    "NumericalWarning",
    "PairwiseTest",
    "PairwiseTestMatrix",
    "ReturnsPanel",
    "SolverError",
    "SpanningResult",
    "VolumePanel",
    "combine_bootstrap",
    "combine_naive",
    "compute_caps",
    "descriptive_stats",
    "diversification_metrics",
    "empirical_var_cvar",
    "estimate_moments",
    "load_panel",
    "lw_pairwise_test",
    "pairwise_test_matrix",
    "performance_metrics",
    "run_backtest",
    "solve_erc",
    "solve_ew",
    "solve_max_pdi",
    "solve_max_return",
    "solve_max_sharpe",
    "solve_min_cvar",
    "solve_min_var",
    "solve_strategy",
    "spanning_tests",
    "trace_frontier",
    "turnover_metrics",
    "write_panel",
]
