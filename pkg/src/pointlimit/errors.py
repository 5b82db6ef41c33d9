"""Exception hierarchy shared by all modules."""

from __future__ import annotations


class PointLimitError(Exception):
    """Base class for all package errors."""


class ProfileError(PointLimitError, ValueError):
    """Invalid piecewise-polynomial profile (bad grid, degree overflow, ...)."""


class LinearDependence(PointLimitError, ValueError):
    """The pair (f, g) is linearly dependent in L2."""


class NoRoot(PointLimitError, ArithmeticError):
    """No nonzero real scale puts the pair on the resonance surface."""


class UnstableClassification(PointLimitError):
    """A branch quantity sits within a factor 10 of its zero threshold (strict mode)."""

    def __init__(self, message, margins=None):
        super().__init__(message)
        self.margins = margins or {}


class UnreachableBranch(PointLimitError, RuntimeError):
    """The node of the bifurcation graph excluded by linear independence was hit."""


class DegenerateDenominator(PointLimitError, ArithmeticError):
    pass


class NonRealSigmaPlus(PointLimitError, ArithmeticError):
    pass


class SelfConsistencySingular(PointLimitError, ArithmeticError):
    """The 2x2 self-consistency system of the rank-two cell problem is singular."""

    def __init__(self, message, condition_number=float("inf")):
        super().__init__(message)
        self.condition_number = condition_number


class OdeToleranceNotMet(PointLimitError, RuntimeError):
    pass


class MatchingSingular(PointLimitError, ArithmeticError):
    pass


class TruncationTooSmall(PointLimitError, ValueError):
    pass


class CouplingViolated(PointLimitError, ValueError):
    """Boundary data does not satisfy the interface conditions of the interaction."""


class Unsolvable(PointLimitError, ArithmeticError):
    """The rank-two Neumann problem violates its solvability condition."""

    def __init__(self, message, defect):
        super().__init__(message)
        self.defect = defect


class SeparatedHasNoTransfer(PointLimitError, ValueError):
    pass


class InsufficientPoints(PointLimitError, ValueError):
    pass
