"""Exception hierarchy shared by every module.

All validation problems derive from :class:`ValidationError` (CLI exit code 2);
search failures derive from :class:`SearchFailure` (exit code 3).
"""


class ParisiError(Exception):
    """Base class for all package errors."""


class ValidationError(ParisiError, ValueError):
    """Bad user input: malformed mixture, chain, measure or option."""


class NonIncreasingExponents(ValidationError):
    pass


class ExponentTooSmall(ValidationError):
    pass


class WeightOutOfRange(ValidationError):
    pass


class WeightSumMismatch(ValidationError):
    pass


class DomainError(ValidationError):
    """An argument lies outside [0, 1]."""


class SingularCurvature(ParisiError, ArithmeticError):
    """The curvature of xi''^{-1/2} is undefined because xi'' vanishes."""


class NonpositiveZ(ValidationError):
    pass


class DegenerateArguments(ValidationError):
    pass


class ChainNotStrict(ValidationError):
    pass


class ArgumentOrder(ValidationError):
    pass


class InvalidMeasure(ValidationError):
    pass


class SearchFailure(ParisiError):
    """A numerical search ended without an acceptable answer."""

    def __init__(self, message, reason=None, details=None):
        super().__init__(message)
        self.reason = reason or message
        self.details = details or {}


class NotFound(SearchFailure):
    pass


class NoSolution(SearchFailure):
    pass


class NonMonotoneWeights(NoSolution):
    pass


class NoPhaseFound(SearchFailure):
    pass


class AmbiguousPhase(ParisiError):
    """Two distinct candidate measures passed verification."""

    def __init__(self, message, candidates=()):
        super().__init__(message)
        self.candidates = list(candidates)


class NotConverged(SearchFailure):
    pass


class Unclassifiable(SearchFailure):
    pass
