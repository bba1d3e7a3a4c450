"""Exception hierarchy for kappa-forge.

Every library error derives from KforgeError so callers (and the CLI) can
distinguish our failures from genuine bugs.
"""

from __future__ import annotations


class KforgeError(Exception):
    """Base class for all kappa-forge errors."""


class ParseError(KforgeError):
    """Syntax error in the operator / Laurent DSL.

    Carries the 0-based character position and a description of what was
    expected at that position.
    """

    def __init__(self, message: str, position: int, expected: str = ""):
        self.position = position
        self.expected = expected
        detail = f"{message} at position {position}"
        if expected:
            detail += f" (expected {expected})"
        super().__init__(detail)


class NonPolynomialError(KforgeError):
    """Division by t or D (or a negative power of them) in operator input."""


class NotMUMError(KforgeError):
    """Indicial polynomial at 0 is not a nonzero multiple of D^r."""


class ConstantQ0Error(KforgeError):
    """Leading coefficient q0 is constant, so there is no finite singularity."""


class TieError(KforgeError):
    """Two roots of q0 share the minimal modulus within tolerance."""


class NoSolutionError(KforgeError):
    """The intertwiner equation p*adjoint(L) = L*p has no polynomial solution."""


class AmbiguousError(KforgeError):
    """A linear solve has solution space of dimension > 1 (raise the data)."""


class NoOperatorError(KforgeError):
    """No recurrence operator of the requested shape annihilates the terms."""


class InsufficientDataError(KforgeError):
    """Too few sample points for the requested extrapolation depth."""


class ZeroConstantTermError(KforgeError):
    """Power series inversion requires a nonzero constant term."""


class DomainError(KforgeError):
    """Argument outside the mathematical domain of the operation."""


class SingularStepError(KforgeError):
    """Leading coefficient of the difference equation vanishes at the target."""


class PathDisagreementError(KforgeError):
    """Two independent computation paths disagree beyond combined error."""


class IntegerArgumentError(KforgeError):
    """The prefactor formula degenerates at integers; use gamma_at_integer."""


class MemoryBudgetError(KforgeError):
    """Sparse polynomial term count exceeded the configured cap."""


class PrecisionError(KforgeError):
    """Input values carry fewer significant bits than the requested precision."""
