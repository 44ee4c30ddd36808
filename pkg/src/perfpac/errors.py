"""Exception types raised across the package."""


class PerfpacError(Exception):
    """Base class for all package errors."""


class ConstraintViolation(PerfpacError, ValueError):
    def __init__(self, which, message=None):
        self.which = which
        super().__init__(message or f"drift constraint violated: {which}")


class DomainError(PerfpacError, ValueError):
    pass


class ProxyOutOfInterval(PerfpacError, ValueError):
    pass


class LengthMismatch(PerfpacError, ValueError):
    pass


class UnboundedRatio(PerfpacError, ValueError):
    pass


class AbsoluteContinuityViolation(PerfpacError, ValueError):
    pass


class MassNotNormalized(PerfpacError, ValueError):
    pass


class EmptySample(PerfpacError, ValueError):
    pass


class WeightExceedsBound(PerfpacError, ValueError):
    pass


class NonFiniteLoss(PerfpacError, FloatingPointError):
    pass


class EmptyDataset(PerfpacError, ValueError):
    pass


class DimensionMismatch(PerfpacError, ValueError):
    pass


class SingleClassDataset(PerfpacError, ValueError):
    pass


class ParseError(PerfpacError, ValueError):
    def __init__(self, row, col, message=None):
        self.row = row
        self.col = col
        super().__init__(message or f"cannot parse cell at row {row}, column {col!r}")


class MissingColumn(PerfpacError, KeyError):
    pass


class NonBinaryLabel(PerfpacError, ValueError):
    pass


class FractionError(PerfpacError, ValueError):
    pass


class Infeasible(PerfpacError, ValueError):
    pass


class SupportTooLarge(PerfpacError, ValueError):
    pass
