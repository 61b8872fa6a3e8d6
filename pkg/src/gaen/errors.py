"""Exception types raised by gaen."""


class GaenError(Exception):
    """Base class for all package errors."""


class ConfigurationError(GaenError, ValueError):
    pass


class ParseError(GaenError, ValueError):
    """Malformed CSV input. ``row`` is the 1-based line number in the file."""

    def __init__(self, message, row=None):
        super().__init__(message if row is None else f"row {row}: {message}")
        self.row = row


class ImputationError(GaenError, ValueError):
    pass


class DataError(GaenError, ValueError):
    pass


class IllPosedError(GaenError, ValueError):
    """The requested fit has no unique minimizer."""


class UndefinedMetricError(GaenError, ZeroDivisionError):
    pass


class FoldError(GaenError):
    """A method failed on one outer fold."""

    def __init__(self, fold, cause):
        super().__init__(f"outer fold {fold}: {cause}")
        self.fold = fold
        self.cause = cause
