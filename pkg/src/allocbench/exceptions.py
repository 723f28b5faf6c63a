"""Exception and warning types shared across the package."""


class AllocBenchError(Exception):
    """Base class for all package errors."""


class DataError(AllocBenchError):
    """Malformed, incomplete or misaligned input panel."""


class ConfigError(AllocBenchError):
    """Invalid run configuration."""


class InfeasibleError(AllocBenchError):
    """The constraint set (simplex plus caps, plus targets) is empty."""


class ConvergenceError(AllocBenchError):
    """An iterative solver hit its iteration limit.

    The last iterate is kept on ``last_iterate`` so callers can inspect it.
    """

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class NoPositiveReturnError(AllocBenchError):
    """Tangency portfolio requested but no asset has a positive mean return."""


class SolverError(AllocBenchError):
    """A strategy failed inside a backtest; carries strategy and window index."""

    def __init__(self, message, strategy=None, window=None):
        super().__init__(message)
        self.strategy = strategy
        self.window = window


class NumericalWarning(UserWarning):
    """Numerical repair was applied (PSD clipping, ridge, cap rescaling, ...)."""
