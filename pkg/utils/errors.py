"""
Exception hierarchy shared by every package.

Callers at the process boundary (cli, api) translate these into exit codes
and HTTP status codes; library code raises them and never prints.
"""

from typing import Optional


class SpotError(Exception):
    """Base class for all errors raised by this project."""


class ArgumentError(SpotError, ValueError):
    """A caller passed an argument outside the operation's domain."""


class CapacityError(ArgumentError):
    """More ground-truth instances than prediction slots."""


class ValidationError(SpotError):
    """A value violates a type invariant (bad transcription, mixed supervision, ...)."""


class NumericalError(SpotError, FloatingPointError):
    """A computation produced a non-finite value."""


class ParseError(SpotError):
    """A structured-text line could not be parsed."""

    def __init__(self, message: str, line_no: Optional[int] = None):
        self.line_no = line_no
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
