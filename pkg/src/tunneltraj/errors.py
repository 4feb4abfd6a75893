"""Shared exception and warning types."""

from __future__ import annotations


class DomainError(ValueError):
    """Input outside the admissible domain (branch cuts, non-finite values)."""


class PreconditionError(ValueError):
    """A documented operation precondition was violated."""


class ConvergenceError(RuntimeError):
    """An iterative scheme failed to reach its tolerance."""


class RegularizationError(RuntimeError):
    """Cutoff dependence of a regularized integral exceeded tolerance."""


class ContourError(ValueError):
    """A complex-time contour passes too close to a pole."""

    def __init__(self, message, segment=None):
        super().__init__(message)
        self.segment = segment


class ResolutionError(RuntimeError):
    """Grid too coarse for the requested evolution."""


class RangeWarning(UserWarning):
    """Input outside the validity window of an asymptotic expansion."""


class ConditioningWarning(UserWarning):
    """Result is ill-conditioned (e.g. near a branch point)."""


class PoleProximity(ArithmeticError):
    """Evaluation point within the guard distance of a pole.

    Carries the pole location and the leading Laurent coefficient so that
    callers can substitute the local expansion instead of a huge float.
    """

    def __init__(self, pole, laurent, order=1, message=None):
        super().__init__(message or f"evaluation within guard distance of pole at {pole}")
        self.pole = pole
        self.laurent = laurent
        self.order = order
