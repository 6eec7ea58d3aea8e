"""Exception hierarchy shared across the package.

Parse/schema errors mean the input file or payload is malformed; domain
errors mean well-formed input that violates an operation's preconditions.
The CLI maps these onto exit codes 2 and 3 respectively.
"""


class WrlabError(Exception):
    """Base class for all package errors."""


class ParseError(WrlabError):
    """Malformed input file. Carries a 1-based line number when known."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaError(WrlabError):
    """Input file or payload does not match the expected schema."""


class DomainError(WrlabError):
    """Well-formed input violating an operation's preconditions."""


# calibration
class InsufficientData(DomainError):
    pass


class NegativeStiffness(DomainError):
    pass


class MismatchedReferenceLength(DomainError):
    pass


# band force
class NonPositiveRestLength(DomainError):
    pass


class MissingMarker(DomainError):
    pass


class InsufficientFrames(DomainError):
    pass


# kinematics
class DegenerateGeometry(DomainError):
    pass


class UnsortedInput(DomainError):
    pass


# protocol
class NonMonotonicTime(DomainError):
    pass


class InsufficientReps(DomainError):
    pass


# stats
class TooFewSamples(DomainError):
    pass


class ZeroVariance(DomainError):
    pass


class TooFewGroups(DomainError):
    pass


class DegenerateDeviations(DomainError):
    pass


# feedback
class NoValidReps(DomainError):
    pass


# simulator
class InvalidAnthropometry(DomainError):
    pass
