"""Exception types shared across the package."""


class BellCertError(Exception):
    """Base class for all package errors."""


class InvalidArgument(BellCertError, ValueError):
    """An input violates a documented precondition."""


class Unsupported(BellCertError, NotImplementedError):
    """The request is valid but this routine cannot serve it (e.g. no closed form)."""


class NumericFailure(BellCertError, ArithmeticError):
    """An iterative numeric routine did not converge.

    ``best`` carries the best value reached before giving up.
    """

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best
