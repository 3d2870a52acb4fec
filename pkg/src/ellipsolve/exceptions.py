"""Exception types shared across the package."""


class EllipsolveError(Exception):
    """Base class for package errors."""


class HypothesisError(EllipsolveError, ValueError):
    """Profile violates the sign conditions required by the solver."""


class ConvergenceError(EllipsolveError, RuntimeError):
    """Iteration did not reach the requested tolerance."""


class DegenerateShapeError(EllipsolveError, RuntimeError):
    """A direct solve drove a semi-axis ratio below the degeneracy threshold."""


class TheoryViolation(EllipsolveError, RuntimeError):
    """Continuation trace collapsed onto a segment or a point."""


class InconclusiveTrace(EllipsolveError, RuntimeError):
    """Continuation trace matches neither limit pattern yet."""
