"""Exception hierarchy shared by every module."""


class OfbmError(Exception):
    """Base class for all package errors."""


class NonDiagonalizable(OfbmError):
    """The matrix cannot be safely diagonalized; pass an explicit (P, blocks) pair."""


class DerivativeUnavailable(OfbmError):
    pass


class StemSingular(OfbmError):
    """A stem function is undefined, or zero where an inverse is needed, at a root."""


class ValidationError(OfbmError):
    def __init__(self, message, path=None):
        self.path = path
        super().__init__(f"{path}: {message}" if path else message)


class ParseError(OfbmError):
    pass


class SingularConversion(OfbmError):
    pass


class WrongExponent(OfbmError):
    pass


class NotObm(OfbmError):
    pass


class ToleranceNotMet(OfbmError):
    def __init__(self, message, achieved=None):
        self.achieved = achieved
        super().__init__(message)


class LrdRangeError(OfbmError):
    def __init__(self, message, root=None):
        self.root = root
        super().__init__(message)


class AmbiguousEntry(OfbmError):
    pass


class CovarianceNotPsd(OfbmError):
    pass


class GridMiss(OfbmError):
    pass


class LowAccuracy(UserWarning):
    """Quadrature error bounds are not certified for roots this close to the boundary."""
