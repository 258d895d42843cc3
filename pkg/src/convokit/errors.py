"""Exception hierarchy shared across the toolkit."""

from __future__ import annotations


class ConvokitError(Exception):
    """Base class for all toolkit errors."""


class ParseError(ConvokitError):
    """A file or string could not be parsed.

    Carries the 1-based line number (and optionally the source path) so
    callers can point at the offending input.
    """

    def __init__(self, message: str, line: int | None = None, path: str | None = None):
        self.line = line
        self.path = path
        prefix = ""
        if path is not None:
            prefix += f"{path}:"
        if line is not None:
            prefix += f"line {line}: "
        super().__init__(prefix + message)


class ValidationError(ConvokitError):
    """Input violated a declared invariant (duplicate name, unknown action, ...)."""


class EventError(ConvokitError):
    """An event could not be applied to a tracker."""

    def __init__(self, message: str, index: int | None = None):
        self.index = index
        if index is not None:
            message = f"event {index}: {message}"
        super().__init__(message)


class TrainingError(ConvokitError):
    """Model training could not proceed or diverged."""


class FingerprintMismatchError(ConvokitError):
    """A trained model was paired with a domain it was not trained against."""


class DirectActError(ConvokitError):
    """A ``/intent{...}`` dialogue act string was malformed or unknown."""


class ProtocolError(ConvokitError):
    """A teaching decision did not match the session's pending state."""
