"""Exception hierarchy shared by the library and the CLI."""


class NBPError(Exception):
    """Base class for all errors raised by nbpmt."""


class DomainError(NBPError, ValueError):
    """An argument lies outside the domain of the operation."""


class InputError(NBPError, ValueError):
    """Malformed user input (files, CLI values)."""


class NumericalError(NBPError, ArithmeticError):
    """A numerical procedure failed to produce a trustworthy result."""


class QuadratureError(NumericalError):
    """Adaptive quadrature did not reach its tolerance.

    The best available estimate and its error estimate are attached so that
    callers may decide whether the result is still usable.
    """

    def __init__(self, message, value=float("nan"), err_est=float("inf")):
        super().__init__(message)
        self.value = value
        self.err_est = err_est
