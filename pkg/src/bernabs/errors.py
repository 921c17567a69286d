"""Exception hierarchy shared across the package."""


class BernabsError(Exception):
    """Base class for all package errors."""


class ParseError(BernabsError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class UniverseError(BernabsError):
    """Variable/universe misuse: unknown variable, store mixing, bad rename."""


class TheoryCapError(BernabsError):
    """Joint enumeration domain exceeds the configured cap."""


class EnumerationCapError(BernabsError):
    """Flip-site or state enumeration exceeds the configured cap."""


class RangeViolationError(BernabsError):
    """Arithmetic produced a value outside a variable's declared range."""


class ModeError(BernabsError):
    """Probabilistic construct in non-deterministic mode, or vice versa."""


class ConditionOnImpossibleError(BernabsError):
    """A query conditioned on an event of probability zero."""


class PredicateBoundError(BernabsError):
    """Predicate list exceeds the configured minterm-enumeration bound."""
