"""Limit point interactions of the shrinking rank-two family.

:func:`classify` walks the bifurcation graph of the resonance invariants and
returns a :class:`LimitInteraction`: either connected coupling conditions

    (v(+0), v'(+0)) = exp(i phase) C (v(-0), v'(-0)),   det C = 1, C real,

or separated Dirichlet/Robin conditions on each half-line.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    DegenerateDenominator,
    NonRealSigmaPlus,
    UnreachableBranch,
    UnstableClassification,
)
from .resonance import InvariantSet, Tolerances, Triple, compute_invariants

IMAG_TOL = 1e-10
DET_TOL = 1e-10
# entries below this fraction of the largest one do not decide the sign
CANON_TINY = 1e-12


class CaseTag(enum.Enum):
    A1 = "A1"
    A2 = "A2"
    A3 = "A3"
    B1 = "B1"
    B2 = "B2"
    B3 = "B3"


@dataclass(frozen=True)
class BoundaryCondition:
    """Dirichlet (theta is None) or Robin v' = theta v at the origin."""

    theta: float | None = None

    @classmethod
    def dirichlet(cls):
        return cls(None)

    @classmethod
    def robin(cls, theta: float):
        return cls(float(theta))

    @property
    def is_dirichlet(self) -> bool:
        return self.theta is None

    def to_dict(self) -> dict:
        if self.is_dirichlet:
            return {"type": "dirichlet"}
        return {"type": "robin", "theta": self.theta}

    @classmethod
    def from_dict(cls, d: dict) -> "BoundaryCondition":
        if d["type"] == "dirichlet":
            return cls.dirichlet()
        if d["type"] in ("robin", "neumann"):
            return cls.robin(d.get("theta", 0.0))
        raise ValueError(f"unknown boundary condition type {d['type']!r}")


@dataclass
class LimitInteraction:
    case: CaseTag
    phase: float | None = None
    matrix: np.ndarray | None = None
    left: BoundaryCondition | None = None
    right: BoundaryCondition | None = None
    margins: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)

    @property
    def connected(self) -> bool:
        return self.matrix is not None

    @property
    def kind(self) -> str:
        return "connected" if self.connected else "separated"

    @classmethod
    def connected_from(cls, case, phase, matrix, **kw) -> "LimitInteraction":
        phase, matrix = canonicalize(phase, matrix)
        return cls(case=CaseTag(case), phase=phase, matrix=matrix, **kw)

    @classmethod
    def separated_from(cls, case, left, right, **kw) -> "LimitInteraction":
        return cls(case=CaseTag(case), left=left, right=right, **kw)

    def to_dict(self) -> dict:
        d = {"case": self.case.value, "kind": self.kind}
        if self.connected:
            d["phase"] = self.phase
            d["matrix"] = [[float(v) for v in row] for row in self.matrix]
        else:
            d["left"] = self.left.to_dict()
            d["right"] = self.right.to_dict()
        d["margins"] = {k: dict(v) for k, v in sorted(self.margins.items())}
        d["warnings"] = list(self.warnings)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "LimitInteraction":
        kw = {"margins": d.get("margins", {}), "warnings": d.get("warnings", [])}
        if d["kind"] == "connected":
            return cls.connected_from(d["case"], d["phase"], np.array(d["matrix"], dtype=float), **kw)
        return cls.separated_from(
            d["case"],
            BoundaryCondition.from_dict(d["left"]),
            BoundaryCondition.from_dict(d["right"]),
            **kw,
        )


def canonicalize(phase: float, matrix) -> tuple:
    """Unique representative of (phase, C) ~ (phase + pi, -C).

    The first entry of C (row-major order) above rounding level is made
    positive and the phase is folded into (-pi, pi].
    """
    C = np.array(matrix, dtype=float)
    flat = C.ravel()
    nz = np.flatnonzero(np.abs(flat) > CANON_TINY * np.max(np.abs(flat), initial=0.0))
    if nz.size and flat[nz[0]] < 0:
        C = -C
        phase = phase + math.pi
    phase = math.remainder(phase, 2.0 * math.pi)
    if phase <= -math.pi:
        phase += 2.0 * math.pi
    # remainder may return exactly -pi
    if phase == -math.pi:
        phase = math.pi
    return float(phase), C


def _real_matrix(entries) -> np.ndarray:
    M = np.array(entries, dtype=complex)
    imag = np.max(np.abs(M.imag))
    if imag > IMAG_TOL * (1.0 + np.max(np.abs(M.real))):
        raise ValueError(f"coupling matrix has imaginary residue {imag:.3e}")
    C = M.real.copy()
    det = np.linalg.det(C)
    if abs(det - 1.0) > DET_TOL * max(1.0, np.max(np.abs(C)) ** 2):
        raise ValueError(f"coupling matrix determinant {det!r} differs from 1")
    return C


def _arg(z: complex) -> float:
    if z == 0:
        raise DegenerateDenominator("phase of zero is undefined")
    a = cmath.phase(z)
    return math.pi if a == -math.pi else a


def matrix_A1(inv: InvariantSet, tol: Tolerances = Tolerances()):
    """Double resonance with a2 != conj(kappa) a1."""
    k, a0, a1, a2 = inv.kappa, inv.a0, inv.a1, inv.a2
    denom_c = a2 - k.conjugate() * a1
    test = inv.tests.get("a2_minus_kappabar_a1")
    if abs(denom_c) == 0 or (test is not None and test.is_zero):
        raise DegenerateDenominator(f"|a2 - conj(kappa) a1| = {abs(denom_c):.3e} is below threshold")
    d = abs(denom_c)
    phase = _arg(a2 - k * a1.conjugate())
    kk = abs(k) ** 2
    C = _real_matrix(
        [
            [(kk * a0 - 2.0 * (k.conjugate() * a1).real + a2) / d, kk / d],
            [(a0 * a2 - abs(a1) ** 2) / d, a2 / d],
        ]
    )
    return canonicalize(phase, C)


def matrix_A2(inv: InvariantSet = None, *, sigma_minus=None, sigma_plus=None, sigma_star=None):
    """Single resonance with nonzero limits of the half-bound state.

    Uses the half-bound state of ``inv`` unless the three numbers are given.
    """
    sm = inv.hbs_sigma_minus if sigma_minus is None else sigma_minus
    sp = inv.hbs_sigma_plus if sigma_plus is None else sigma_plus
    ss = inv.hbs_sigma_star if sigma_star is None else sigma_star
    sm, sp = complex(sm), complex(sp)
    if abs(sp.imag) > IMAG_TOL * (1.0 + abs(sp)):
        raise NonRealSigmaPlus(f"sigma_plus has imaginary part {sp.imag:.3e}")
    sp = sp.real
    if sp == 0 or sm == 0:
        raise DegenerateDenominator("A2 needs sigma_minus * sigma_plus != 0")
    phase = -_arg(sm)
    am = abs(sm)
    C = _real_matrix([[sp / am, 0.0], [float(ss) / (sp * am), am / sp]])
    return canonicalize(phase, C)


def matrix_A3(inv: InvariantSet):
    return canonicalize(0.0, np.array([[1.0, 0.0], [inv.a0, 1.0]]))


def separated_B1(inv: InvariantSet):
    kk = abs(inv.kappa) ** 2
    if kk == 0:
        raise DegenerateDenominator("B1 needs kappa != 0")
    return (
        BoundaryCondition.robin(inv.a2 / kk - inv.a0),
        BoundaryCondition.robin(inv.a2 / kk),
    )


def separated_B2(inv: InvariantSet = None, *, sigma_minus=None, sigma_plus=None, sigma_star=None,
                 tol: Tolerances = Tolerances()):
    """Dirichlet on the side where the half-bound state vanishes, Robin on the other."""
    sm = inv.hbs_sigma_minus if sigma_minus is None else complex(sigma_minus)
    sp = inv.hbs_sigma_plus if sigma_plus is None else complex(sigma_plus)
    ss = inv.hbs_sigma_star if sigma_star is None else float(sigma_star)
    if inv is not None and sigma_minus is None:
        minus_zero = inv.tests["sigma_minus"].is_zero
        plus_zero = inv.tests["sigma_plus"].is_zero
    else:
        minus_zero, plus_zero = sm == 0, sp == 0
    if minus_zero and not plus_zero:
        return BoundaryCondition.dirichlet(), BoundaryCondition.robin(ss / abs(sp) ** 2)
    if plus_zero and not minus_zero:
        return BoundaryCondition.robin(-ss / abs(sm) ** 2), BoundaryCondition.dirichlet()
    raise DegenerateDenominator("B2 needs exactly one of sigma_minus, sigma_plus to vanish")


def _margin(test) -> dict:
    return {
        "value": float(test.magnitude),
        "threshold": float(test.threshold),
        "ratio": float(test.magnitude / test.threshold) if test.threshold > 0 else math.inf,
        "is_zero": bool(test.is_zero),
        "near_boundary": bool(test.near_boundary),
    }


def classify(
    t: Triple,
    tol: Tolerances = Tolerances(),
    strict: bool = False,
    inv: InvariantSet | None = None,
) -> LimitInteraction:
    """Limit point interaction of the triple.

    Every zero test the walk consults is recorded in ``margins``; in strict
    mode any of them lying within a factor 10 of its threshold raises
    :class:`UnstableClassification`.
    """
    inv = inv or compute_invariants(t, tol)
    T = inv.tests
    used = []

    def zero(name):
        used.append(name)
        return T[name].is_zero

    def finish(result: LimitInteraction) -> LimitInteraction:
        result.margins = {n: _margin(T[n]) for n in used}
        unstable = [n for n in used if T[n].near_boundary]
        result.warnings = [f"classification unstable: {n} is near its zero threshold" for n in unstable]
        if strict and unstable:
            raise UnstableClassification(
                "classification unstable at " + ", ".join(unstable), result.margins
            )
        return result

    f0_zero, g0_zero = zero("f0"), zero("g0")
    if f0_zero and g0_zero:
        if not zero("pi"):
            return finish(LimitInteraction.connected_from("A3", *matrix_A3(inv)))
        if not zero("a2_minus_kappabar_a1"):
            return finish(LimitInteraction.connected_from("A1", *matrix_A1(inv, tol)))
        if not zero("kappa"):
            return finish(LimitInteraction.separated_from("B1", *separated_B1(inv)))
        if not zero("a1"):
            return finish(_dirichlet_pair())
        return finish(LimitInteraction.connected_from("A3", *matrix_A3(inv)))

    if not zero("lambda"):
        return finish(_dirichlet_pair())
    if f0_zero or g0_zero:
        raise UnreachableBranch(
            "lambda = 0 with exactly one zero mean forces f and g to be dependent"
        )
    sm_zero, sp_zero = zero("sigma_minus"), zero("sigma_plus")
    if not sm_zero and not sp_zero:
        return finish(LimitInteraction.connected_from("A2", *matrix_A2(inv)))
    if not zero("f0g1_minus_f1g0"):
        return finish(LimitInteraction.separated_from("B2", *separated_B2(inv, tol=tol)))
    return finish(_dirichlet_pair())


def _dirichlet_pair() -> LimitInteraction:
    return LimitInteraction.separated_from(
        "B3", BoundaryCondition.dirichlet(), BoundaryCondition.dirichlet()
    )
