"""Exception types raised across the package.

Every error derives from :class:`BiTrajError` and from the closest builtin,
so callers can catch either.
"""


class BiTrajError(Exception):
    """Base class for all package errors."""


class NotSquare(BiTrajError, ValueError):
    pass


class NotHermitian(BiTrajError, ValueError):
    def __init__(self, asymmetry, message=None):
        self.asymmetry = float(asymmetry)
        super().__init__(message or f"matrix is not Hermitian (max asymmetry {self.asymmetry:.3e})")


class DimensionMismatch(BiTrajError, ValueError):
    pass


class InvalidObservable(BiTrajError, ValueError):
    pass


class UnknownOutcome(BiTrajError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown outcome"


class CellMismatch(BiTrajError, ValueError):
    pass


class NotFineGrained(BiTrajError, ValueError):
    pass


class WeightSumError(BiTrajError, ValueError):
    pass


class InvalidState(BiTrajError, ValueError):
    pass


class ScheduleError(BiTrajError, ValueError):
    pass


class LengthMismatch(BiTrajError, ValueError):
    pass


class ZeroConditioningEvent(BiTrajError, ZeroDivisionError):
    pass


class EnumerationCapExceeded(BiTrajError, RuntimeError):
    pass


class PathCapExceeded(BiTrajError, RuntimeError):
    pass


class PositionOutOfRange(BiTrajError, IndexError):
    pass


class NotPSD(BiTrajError, ValueError):
    def __init__(self, min_eigenvalue):
        self.min_eigenvalue = float(min_eigenvalue)
        super().__init__(f"matrix is not positive semi-definite (min eigenvalue {self.min_eigenvalue:.3e})")


class CouplingNonzero(BiTrajError, ValueError):
    pass


class BadSplit(BiTrajError, ValueError):
    pass


class BadDimension(BiTrajError, ValueError):
    pass


class GridMisaligned(BiTrajError, ValueError):
    pass


class IndexOutOfRange(BiTrajError, IndexError):
    pass


class DegenerateGaugeWarning(UserWarning):
    """Coordinates for an observable with degenerate outcomes are not unique."""


class SchemaError(BiTrajError, ValueError):
    """Invalid run configuration; ``path`` locates the offending JSON value."""

    def __init__(self, path: str, message: str):
        self.path = path
        self.message = message
        super().__init__(f"{path}: {message}")


class UnknownExperiment(BiTrajError, KeyError):
    def __str__(self):
        return str(self.args[0]) if self.args else "unknown experiment"
