"""The rank-two Neumann problem and the two-term inner expansion.

The problem is

    -v'' + (g, v) f + (f, v) g = r  on [-1, 1],   v'(-1) = a,  v'(1) = b.

Every solution has the form ``v = c1 F2 + c2 G2 - R2 + c3 + a (x + 1)`` with
F2, G2, R2 the second antiderivatives of f, g, r; the coefficients solve a
3x3 system whose matrix is ``lemma_matrix``.  By the
Fredholm alternative the problem is solvable iff

    a conj(u(-1)) - b conj(u(1)) = (u, r)

for every half-bound state u, and then unique up to half-bound states.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .classifier import CaseTag, LimitInteraction
from .errors import CouplingViolated, Unsolvable
from .profiles import Profile, TailedProfile, antiderivative, inner, l2norm
from .resonance import (
    HalfBoundKind,
    InvariantSet,
    Tolerances,
    Triple,
    apply_model_operator,
    compute_invariants,
    lemma_matrix,
    resonance_kind,
)

DEFECT_TOL = 1e-10
COUPLING_TOL = 1e-9


@dataclass
class NeumannSolution:
    v: Profile
    kind: HalfBoundKind
    normalization: str
    defects: dict = field(default_factory=dict)
    residual: float = 0.0
    slope_defect: float = 0.0

    def __call__(self, x):
        return self.v(x)


def half_bound_basis(inv: InvariantSet, kind: HalfBoundKind) -> list:
    if kind is HalfBoundKind.CONST_ONLY:
        return [TailedProfile.constant(1.0)]
    if kind is HalfBoundKind.DOUBLE:
        return [TailedProfile.constant(1.0), inv.omega]
    if kind is HalfBoundKind.SIGMA:
        return [inv.hbs_sigma]
    return []


def solvability_defects(inv: InvariantSet, kind: HalfBoundKind, r: Profile, a: complex, b: complex) -> dict:
    """``a conj(u(-1)) - b conj(u(1)) - (u, r)`` for each half-bound state u."""
    names = {
        HalfBoundKind.CONST_ONLY: ["one"],
        HalfBoundKind.DOUBLE: ["one", "omega"],
        HalfBoundKind.SIGMA: ["sigma"],
    }.get(kind, [])
    out = {}
    for name, u in zip(names, half_bound_basis(inv, kind)):
        um, up = u.left_value(), u.right_value()
        out[name] = a * um.conjugate() - b * up.conjugate() - inner(u, r)
    return out


def solve_rank2_neumann(
    t: Triple,
    r: Profile,
    a: complex,
    b: complex,
    tol: Tolerances = Tolerances(),
    inv: InvariantSet | None = None,
    defect_tol: float = DEFECT_TOL,
) -> NeumannSolution:
    """Normalized solution of the rank-two Neumann problem, or :class:`Unsolvable`.

    Normalizations: double resonance with kappa != 0, v(-1) = v(1) = 0;
    double resonance with kappa = 0, v(-1) = 0 and (omega, v) = 0; constant
    resonance only, v(-1) = 0; single resonance sigma, (sigma, v) = 0.
    """
    inv = inv or compute_invariants(t, tol)
    kind = resonance_kind(inv)
    a, b = complex(a), complex(b)
    r = r.refine((-1.0, 1.0))
    r_norm = l2norm(r)
    defects = solvability_defects(inv, kind, r, a, b)
    scale = abs(a) + abs(b) + r_norm
    for name, d in defects.items():
        u = half_bound_basis(inv, kind)[list(defects).index(name)]
        u_scale = max(abs(u.left_value()), abs(u.right_value()), u.core.max_abs())
        if abs(d) > defect_tol * (1.0 + scale * u_scale):
            raise Unsolvable(f"solvability condition for {name} violated (defect {abs(d):.3e})", defects)

    F2, G2 = antiderivative(t.f, 2), antiderivative(t.g, 2)
    R2 = antiderivative(r, 2).core
    lin = Profile.poly([1.0, 1.0])
    A, _ = lemma_matrix(t, inv)
    rhs = np.array(
        [
            inner(t.f, R2) - a * inner(t.f, lin),
            inner(t.g, R2) - a * inner(t.g, lin),
            b - a + r.integral(),
        ]
    )
    if kind is HalfBoundKind.NONE:
        c = np.linalg.solve(A, rhs)
    else:
        c, *_ = np.linalg.lstsq(A, rhs, rcond=1e-10)
    v = F2.core * c[0] + G2.core * c[1] - R2 + Profile.constant(c[2]) + lin * a

    normalization = "unique"
    if kind is HalfBoundKind.CONST_ONLY:
        v = v - Profile.constant(v(-1.0))
        normalization = "v(-1)=0"
    elif kind is HalfBoundKind.SIGMA:
        s = inv.hbs_sigma.core
        v = v - s * (inner(s, v) / inner(s, s))
        normalization = "(sigma,v)=0"
    elif kind is HalfBoundKind.DOUBLE:
        om = inv.omega.core
        v = v - Profile.constant(v(-1.0))
        if not inv.tests["kappa"].is_zero:
            v = v - om * (v(1.0) / inv.kappa)
            normalization = "v(-1)=v(1)=0"
        else:
            v = v - om * (inner(om, v) / inner(om, om))
            normalization = "v(-1)=0,(omega,v)=0"

    residual = l2norm(apply_model_operator(t, v) - r)
    dv = v.derivative()
    slope_defect = max(abs(dv(-1.0) - a), abs(dv(1.0) - b))
    return NeumannSolution(v, kind, normalization, defects, residual, slope_defect)


def solution_map_bound(t: Triple, degree: int = 8, tol: Tolerances = Tolerances()) -> float:
    """Operator norm of (r, a, b) -> v on solvable data with r a polynomial of bounded degree.

    The data norm is sqrt(|a|^2 + |b|^2 + ||r||^2), which is at most
    |a| + |b| + ||r||, so ``||v|| <= c (|a| + |b| + ||r||)`` with this c.
    """
    from numpy.polynomial import legendre as Leg

    inv = compute_invariants(t, tol)
    kind = resonance_kind(inv)
    basis = []
    for n in range(degree + 1):
        coef = Leg.leg2poly([0] * n + [1]) * np.sqrt((2 * n + 1) / 2.0)
        basis.append(Profile.poly(coef))
    # data vectors: Legendre coefficients of r (complex), then a, b
    dim = degree + 3
    states = half_bound_basis(inv, kind)
    # constraint rows: a conj(u(-1)) - b conj(u(1)) - (u, r) = 0
    C = np.zeros((len(states), dim), dtype=complex)
    for i, u in enumerate(states):
        for j, p in enumerate(basis):
            C[i, j] = -inner(u, p)
        C[i, degree + 1] = u.left_value().conjugate()
        C[i, degree + 2] = -u.right_value().conjugate()
    if len(states):
        _, s, vh = np.linalg.svd(C)
        rank = int(np.sum(s > 1e-12 * max(s.max(), 1.0)))
        null = vh[rank:].conj().T
    else:
        null = np.eye(dim, dtype=complex)
    images = []
    for col in null.T:
        r = sum((basis[j] * col[j] for j in range(degree + 1)), Profile.zero())
        sol = solve_rank2_neumann(t, r, col[degree + 1], col[degree + 2], tol, inv, defect_tol=1e-8)
        images.append(sol.v)
    # Gram matrix of the images in L2
    G = np.array([[inner(u, w) for w in images] for u in images])
    return float(np.sqrt(max(np.linalg.eigvalsh(0.5 * (G + G.conj().T)).max(), 0.0)))


def check_coupling(interaction: LimitInteraction, data, tol: float = COUPLING_TOL) -> float:
    """Defect of (y-, y'-, y+, y'+) in the interaction's interface conditions."""
    ym, dym, yp, dyp = (complex(v) for v in data)
    size = 1.0 + max(abs(ym), abs(dym), abs(yp), abs(dyp))
    if interaction.connected:
        M = np.exp(1j * interaction.phase) * interaction.matrix
        defect = np.abs(np.array([yp, dyp]) - M @ np.array([ym, dym])).max()
    else:
        defect = 0.0
        for bc, y, dy in ((interaction.left, ym, dym), (interaction.right, yp, dyp)):
            defect = max(defect, abs(y) if bc.is_dirichlet else abs(dy - bc.theta * y))
    if defect > tol * size:
        raise CouplingViolated(f"boundary data violate the interface conditions (defect {defect:.3e})")
    return defect


def inner_expansion(
    t: Triple,
    interaction: LimitInteraction,
    data,
    tol: Tolerances = Tolerances(),
    inv: InvariantSet | None = None,
):
    """Leading terms u + eps v of the cell solution matching limit data.

    ``data = (y(0-), y'(0-), y(0+), y'(0+))`` of a limit solution.  u is the
    half-bound state with u(-1) = y(0-), u(1) = y(0+); v solves the Neumann
    problem with forcing -q u and slopes y'(0-), y'(0+).
    """
    inv = inv or compute_invariants(t, tol)
    check_coupling(interaction, data)
    ym, dym, yp, dyp = (complex(v) for v in data)
    tag = interaction.case
    kind = resonance_kind(inv)
    T = inv.tests
    if kind is HalfBoundKind.DOUBLE:
        if not T["kappa"].is_zero:
            u = TailedProfile.constant(ym) + inv.omega * ((yp - ym) / inv.kappa)
        elif tag is CaseTag.A1:
            u = TailedProfile.constant(ym) - inv.omega * (ym * inv.a1.conjugate() / inv.a2)
        elif tag is CaseTag.A3:
            u = TailedProfile.constant(ym)
        else:
            # kappa = a2 = 0, a1 != 0: y(0) = 0 and the omega weight follows from the slope jump
            u = inv.omega * ((dyp - dym) / inv.a1)
    elif kind is HalfBoundKind.CONST_ONLY:
        u = TailedProfile.constant(ym)
    elif kind is HalfBoundKind.SIGMA:
        s = inv.hbs_sigma
        if not T["sigma_plus"].is_zero:
            c0 = yp / inv.hbs_sigma_plus
        elif not T["sigma_minus"].is_zero:
            c0 = ym / inv.hbs_sigma_minus
        else:
            # both limits vanish: the solvability condition forces c0 sigma_* = 0
            c0 = 0.0
        u = s * c0
    else:
        u = TailedProfile.constant(0.0)
    r = -(t.q.refine((-1.0, 1.0)) * u.core)
    v = solve_rank2_neumann(t, r, dym, dyp, tol, inv)
    return u, v
