"""Exception types shared across the package."""


class ChoquardError(Exception):
    """Base class for all package-specific errors."""


class GridMismatchError(ChoquardError):
    """Operands live on different grids."""


class ConvergenceError(ChoquardError):
    """An iterative solve failed to reach its tolerance.

    Carries the last iterate diagnostics so callers can inspect what
    happened instead of just losing the run.
    """

    def __init__(self, message, diagnostics=None):
        super().__init__(message)
        self.diagnostics = diagnostics or {}


class ConfigError(ChoquardError):
    """Invalid experiment configuration (unknown key, bad value, ...)."""
