"""Exception types shared across the package."""


class DomainError(ValueError):
    """An argument lies outside the domain of the requested function."""


class ConvergenceError(ArithmeticError):
    """A series or quadrature did not reach the requested tolerance.

    The partial result and the achieved error estimate are attached so the
    caller can decide whether the value is still usable.
    """

    def __init__(self, message, value=None, error=None):
        super().__init__(message)
        self.value = value
        self.error = error


class UnsupportedVariantError(TypeError):
    """The operation is not defined for this copula variant."""
