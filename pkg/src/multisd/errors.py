"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the mathematical domain of a function."""


class ConvergenceError(RuntimeError):
    """An iterative or truncated procedure did not meet its tolerance."""


class QuadratureError(ConvergenceError):
    """Quadrature subdivision budget exhausted."""


class BracketError(ValueError):
    """Root bracket endpoints do not straddle a sign change."""


class OrderError(ValueError):
    """Derivatives of the requested order are not available."""


class RegimeError(ValueError):
    """Parameters outside the regime where a bound is established."""


class InconclusiveError(RuntimeError):
    """A numerical test could neither confirm nor refute its hypothesis."""


class DivergenceError(ConvergenceError):
    """A tail integral required by a transform does not converge."""
