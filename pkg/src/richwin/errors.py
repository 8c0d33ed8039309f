"""Exception types shared across the package."""


class RichwinError(Exception):
    """Base class for all errors raised by richwin."""


class NotSymmetric(RichwinError, ValueError):
    pass


class SingularPivot(RichwinError, ArithmeticError):
    """A pivot fell below the hard division floor."""

    def __init__(self, index, value):
        self.index = index
        self.value = value
        super().__init__(f"pivot {index} has magnitude {abs(value):.3e}")


class NotConverged(RichwinError):
    """An iteration hit its cap.  ``best`` carries the last estimate."""

    def __init__(self, message, best=None):
        super().__init__(message)
        self.best = best


class ZeroVector(RichwinError, ArithmeticError):
    pass


class ShiftTooSmall(RichwinError):
    """beta*I - A is not positive semidefinite: lambda_max was underestimated."""


class BadSpectrum(RichwinError, ValueError):
    pass


class Diverging(RichwinError):
    pass


class SNearSingular(RichwinError, ArithmeticError):
    def __init__(self, det, scale):
        self.det = det
        self.scale = scale
        super().__init__(f"|det S| = {abs(det):.3e} below guard {scale:.3e}")


class WindowTooSmall(RichwinError, ValueError):
    pass


class ParseError(RichwinError, ValueError):
    def __init__(self, message, line=None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


class ConfigError(RichwinError, ValueError):
    pass
