"""Exception types raised across the package."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of an operation."""


class DivergentLimitError(ArithmeticError):
    """A requested limit is infinite (e.g. noiseless Holevo PIE)."""


class ResolutionError(ValueError):
    """Time grid too coarse or too short for the requested mode."""


class ExtentError(ValueError):
    """Detection window extends past the time grid."""


class ConvergenceError(ArithmeticError):
    """A truncated series or optimization failed its convergence check."""


class UnsupportedOrderError(ValueError):
    """Modulation order not supported (Hadamard codes need a power of two)."""
