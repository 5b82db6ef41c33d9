"""Norm-resolvent limits of 1-D Schroedinger operators with shrinking rank-two perturbations.

The package classifies the point interaction that ``-d^2 + eps^-3 Q_eps +
eps^-1 q(x/eps)`` converges to, and checks the classification numerically
through scattering and resolvent data of the eps-operator.
"""

__version__ = "0.1.0"

from .classifier import CaseTag, LimitInteraction, classify
from .profiles import Profile, TailedProfile, antiderivative, inner, l2norm, moment
from .resonance import Tolerances, Triple, compute_invariants, half_bound_states, lemma_matrix

__all__ = [
    "CaseTag",
    "LimitInteraction",
    "Profile",
    "TailedProfile",
    "Tolerances",
    "Triple",
    "antiderivative",
    "classify",
    "compute_invariants",
    "half_bound_states",
    "inner",
    "l2norm",
    "lemma_matrix",
    "moment",
]
