"""Exception hierarchy shared across the package.

The CLI maps these onto its exit-code contract: configuration problems
exit 1, failed numerical assertions exit 2, solver/numerics breakdowns
exit 3.
"""


class ThinlapError(Exception):
    """Base class for all package-specific errors."""


class RegimeError(ThinlapError, ValueError):
    """A quantity was requested outside its admissible (a, n) regime."""


class ConfigError(ThinlapError, ValueError):
    """Invalid experiment configuration (unknown key, bad value, bad combo)."""


class RangeError(ThinlapError, ValueError):
    """Requested evaluation points fall outside a grid's extent."""


class ResolutionError(ThinlapError, ValueError):
    """A grid is too coarse for the requested operation."""


class SolverError(ThinlapError, RuntimeError):
    """Linear solver failed to converge; carries the best residual seen."""

    def __init__(self, message: str, best_residual: float | None = None):
        super().__init__(message)
        self.best_residual = best_residual


class CheckFailure(ThinlapError, AssertionError):
    """A configured numerical assertion did not hold."""
