"""Exception types shared across the package.

Two umbrella categories matter for exit codes: configuration or argument
problems (ValidationError family) and runtime numerical failures
(NumericalError family).
"""


class ValidationError(ValueError):
    """Bad user-supplied parameter, config, or argument shape."""


class InvalidParameterError(ValidationError):
    """A physical or tuning parameter is out of its admissible range."""


class UnsupportedShapeError(ValidationError):
    """Operation is defined only for a narrower matrix/signal shape."""


class NumericalError(ArithmeticError):
    """A numerical procedure failed to converge or hit a singularity."""


class SingularityError(NumericalError):
    """A matrix that must be invertible is singular to working precision."""


class NotObservableError(NumericalError):
    """Observability matrix is rank deficient; canonical form undefined."""


class DivergenceError(NumericalError):
    """An iteration left the admissible region (NaN/Inf or unbounded)."""
