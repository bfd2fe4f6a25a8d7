"""Exception types shared across the package."""


class DomainError(ValueError):
    """Argument outside the supported parameter domain."""


class AccuracyError(ArithmeticError):
    """A series or iteration hit its hard cap before reaching tolerance."""


class QuadratureError(ArithmeticError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message, achieved=None):
        super().__init__(message)
        self.achieved = achieved


class RegimeError(ValueError):
    """Input data lies outside the asymptotic regime an estimator assumes."""


class EdgeMaximumWarning(UserWarning):
    """A maximum over a grid was attained at the grid boundary."""
