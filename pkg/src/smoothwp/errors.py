"""Exception types shared across the package."""


class SmoothWpError(Exception):
    """Base class for all library errors."""


class NonFiniteError(SmoothWpError, ValueError):
    """An input that must be finite is NaN or infinite."""


class RangeOverflowError(SmoothWpError, OverflowError):
    """A result would exceed (or dangerously approach) the float64 range."""


class DimensionMismatchError(SmoothWpError, ValueError):
    """Operands live in different ambient dimensions."""


class InvalidSpecError(SmoothWpError, ValueError):
    """A distribution or experiment spec violates its invariants."""


class SolverFailureError(SmoothWpError, RuntimeError):
    """An OT solver failed on an instance that should be feasible."""


class NonConvergenceError(SmoothWpError, RuntimeError):
    """An iterative solver hit its iteration cap before reaching tolerance."""


class InfeasibleThetaError(SmoothWpError, ValueError):
    """A parameter vector lies outside the family's feasible set."""
