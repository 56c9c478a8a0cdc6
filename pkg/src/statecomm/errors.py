"""Semantic exception hierarchy shared across the package."""


class StatecommError(Exception):
    """Base error for this package."""


class ValidationError(StatecommError, ValueError):
    """Inputs violate a contract: domain, shape, normalization, or type."""


class ParseError(ValidationError):
    """A text input could not be parsed; carries a 1-based line number."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class ExpansionTooLargeError(StatecommError):
    """Strategy-alphabet expansion would exceed the configured cap."""


class CodebookMemoryError(StatecommError):
    """Requested codebook would exceed the codeword-symbol memory cap."""


class InjectivityError(ValidationError):
    """A claimed state-injective channel map has a colliding (x, s, s') triple."""


class EncodingInfeasibleError(StatecommError):
    """A card hand admits no legal arrangement (deck larger than the bound)."""


class UndecodableArrangementError(StatecommError):
    """An arrangement does not correspond to any legal encoding."""
