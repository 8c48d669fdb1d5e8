"""Exception hierarchy for wavefront_lab."""


class WavefrontError(Exception):
    """Base class for all package errors."""


class IllFormedKernel(WavefrontError, ValueError):
    pass


class AbscissaBoundary(WavefrontError, ArithmeticError):
    """Evaluation requested too close to a finite convergence abscissa.

    ``limit`` carries the one-sided limit from below when it is known.
    """

    def __init__(self, message, abscissa=None, limit=None):
        super().__init__(message)
        self.abscissa = abscissa
        self.limit = limit


class BracketFailure(WavefrontError, ArithmeticError):
    pass


class DenominatorNearZero(WavefrontError, ArithmeticError):
    pass


class DenominatorNonPositive(WavefrontError, ArithmeticError):
    pass


class NonFiniteDerivative(WavefrontError, ArithmeticError):
    pass


class ModelError(WavefrontError, ValueError):
    """A model violates a structural requirement (e.g. f'(0) >= g'(0) or L < g'(0))."""


class GridTooCoarse(WavefrontError, ValueError):
    pass


class WindowTooSmall(WavefrontError, ArithmeticError):
    pass


class TailTooShort(WavefrontError, ValueError):
    pass


class ConfigError(WavefrontError, ValueError):
    """Invalid run configuration; ``path`` names the offending JSON field."""

    def __init__(self, message, path=""):
        super().__init__(f"{path}: {message}" if path else message)
        self.path = path
