"""Exception taxonomy.

ValidationError covers bad user input (CLI exit code 1); NumericsError and
its children cover failures of the numerical machinery itself (exit code 2).
"""


class JostscatError(Exception):
    """Base class for all package errors."""


class ValidationError(JostscatError):
    """Invalid configuration, file format or argument combination."""


class DomainError(ValidationError):
    """Argument outside the mathematical domain of an operation."""


class NumericsError(JostscatError):
    """A numerical procedure failed to reach its accuracy target."""


class BranchError(NumericsError):
    """Evaluation requested on an unresolved branch cut."""


class GridError(NumericsError):
    """Grid construction failed (node collides with a propagator singularity)."""


class TruncationError(NumericsError):
    """Tail truncation bound exceeds the requested tolerance."""


class ExtractionError(NumericsError):
    """Small-radius limit did not reach a plateau."""


class DivergenceError(NumericsError):
    """An integral or iteration diverged."""


class RenormalizationError(NumericsError):
    """Cutoff ladder failed to form a Cauchy sequence."""
