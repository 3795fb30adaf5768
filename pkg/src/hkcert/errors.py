"""Exception hierarchy shared by every module.

Each class carries the process exit code the command-line front end maps it
to, so library callers and the CLI agree on what kind of failure occurred.
"""


class HKError(Exception):
    exit_code = 1


class DomainError(HKError, ValueError):
    """Input outside an operation's mathematical domain (e.g. ``n < 2``)."""

    exit_code = 2


class StructuralError(DomainError):
    """Mismatched variable universes, arities, grids or shapes."""


class ParseError(DomainError):
    """Malformed JSON document; ``location`` points at the offending field."""

    def __init__(self, message, location=None):
        if location is not None:
            message = f"{location}: {message}"
        super().__init__(message)
        self.location = location


class CapacityError(HKError):
    """A request exceeds a configured size bound (degree, n_max, exponents)."""

    exit_code = 3


class NumericalError(HKError, ArithmeticError):
    """An iterative solver failed to reach its tolerance."""

    exit_code = 4

    def __init__(self, message, residual_history=()):
        super().__init__(message)
        self.residual_history = list(residual_history)


class InvariantViolation(HKError, RuntimeError):
    """An internal mathematical guarantee failed; always a bug or a defect."""

    exit_code = 5
