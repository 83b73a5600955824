"""Exception types raised across the package."""


class DKSDError(Exception):
    """Base class for all package errors."""


class DimensionError(DKSDError, ValueError):
    """Inputs have incompatible dimensions."""


class PoleSingularity(DKSDError, ArithmeticError):
    """A spherical coordinate sits on a chart pole even after clamping."""

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class NotConverged(DKSDError, ArithmeticError):
    """An iterative numerical routine hit its iteration cap."""


class ParseError(DKSDError, ValueError):
    """A model spec could not be parsed."""

    def __init__(self, message, line=1, column=1):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


class ValidationError(DKSDError, ValueError):
    """A parsed value violates a model or configuration invariant."""


class RejectionStall(DKSDError, RuntimeError):
    """A rejection sampler rejected too many consecutive proposals."""


class TuningFailure(DKSDError, RuntimeError):
    """The ACG envelope tuning equation has no root in its bracket."""


class UnsupportedAlpha(DKSDError, ValueError):
    """No tabulated critical value exists for the requested level."""


class FormatError(DKSDError, ValueError):
    """A data or plan file row is malformed."""

    def __init__(self, message, row=None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


class NormError(FormatError):
    """A data row is too far from unit length to be renormalized."""

    def __init__(self, row, deviation):
        super().__init__(f"vector norm deviates from 1 by {deviation:.3g}", row)
        self.deviation = deviation
