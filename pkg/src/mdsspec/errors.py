"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of an operation."""


class ConvergenceError(RuntimeError):
    """An iterative solver hit its iteration cap."""


class QuadratureOrderError(ValueError):
    """Quadrature order too low for the requested degree."""


class InsufficientDataError(ValueError):
    """Not enough points/degrees for a fit or a match."""


class NumericError(RuntimeError):
    """A numeric post-condition (residual, orthogonality) was violated."""
