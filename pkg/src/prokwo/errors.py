"""Exception taxonomy shared across the toolkit.

The CLI maps these onto exit codes: ConfigError -> 1, DataError -> 2,
ConvergenceError -> 3.
"""


class ProkwoError(Exception):
    """Base class for all toolkit errors."""


class ConfigError(ProkwoError):
    """Invalid configuration or usage (bad flag values, unreadable paths)."""


class DataError(ProkwoError):
    """Malformed or inconsistent input data."""


class ChatParseError(DataError):
    """A CHAT transcript line could not be parsed."""

    def __init__(self, message, line_no=None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class InsufficientDataError(DataError):
    """Too few complete observations for the requested statistic."""


class ConstantInputError(DataError):
    """A statistic is undefined because an input series has zero variance."""


class ConvergenceError(ProkwoError):
    """A fitting routine failed in a way that invalidates its estimates."""


class SeparationError(ConvergenceError):
    """Logistic fit diverged, indicating (quasi-)complete separation."""


class NumericalError(ConvergenceError):
    """Non-finite values were encountered during fitting."""
