"""Exception hierarchy shared by every layer of the library."""

from __future__ import annotations


class HHOError(Exception):
    """Base class for all library errors."""


class UnboundIdentifier(HHOError):
    pass


class TypeMismatch(HHOError):
    pass


class DuplicateContextVariable(HHOError):
    pass


class InvalidPosition(HHOError):
    pass


class EscapedBoundVariable(HHOError):
    pass


class NotAPattern(HHOError):
    pass


class InvalidSignature(HHOError):
    pass


class InvalidRule(HHOError):
    pass


class FuelExhausted(HHOError):
    """Normalization ran out of steps; ``trace`` holds the partial trace."""

    def __init__(self, message, trace=None, peak=None):
        super().__init__(message)
        self.trace = trace
        self.peak = peak


class StepInapplicable(HHOError):
    """Step number ``index`` (0-based) of a derivation could not be applied."""

    def __init__(self, message, index):
        super().__init__(f"step {index + 1}: {message}")
        self.index = index


class NotJoinable(HHOError):
    def __init__(self, message, peak=None):
        super().__init__(message)
        self.peak = peak


class ParseError(HHOError):
    """Diagnostic with a 1-based source location."""

    def __init__(self, message, line=0, column=0):
        loc = f"{line}:{column}: " if line else ""
        super().__init__(f"{loc}{message}")
        self.message = message
        self.line = line
        self.column = column


class PrsSyntaxError(ParseError):
    pass


class UnknownSort(ParseError):
    pass


class DuplicateName(ParseError):
    pass
