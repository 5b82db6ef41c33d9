"""Resonance invariants of a triple (f, g, q) and half-bound states of the model operator.

The model operator is ``B u = -u'' + <g, u> f + <f, u> g`` on the line.  All
functionals below (moments, the antiderivative norms, pi, lambda, omega,
kappa, sigma and its limits, a0, a1, a2) are computed by exact
piecewise-polynomial quadrature.  Zero tests are explicit: every quantity the
classifier branches on is stored as a :class:`ZeroTest` carrying its value,
natural scale and threshold.
"""

from __future__ import annotations

import cmath
import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import LinearDependence, NoRoot, ProfileError
from .profiles import (
    Profile,
    TailedProfile,
    antiderivative,
    inner,
    l2norm,
    moment,
    weighted_inner,
)

DEPENDENCE_TOL = 1e-12


@dataclass(frozen=True)
class Tolerances:
    """A quantity x with natural scale s counts as zero iff |x| <= rel*s + abs."""

    rel: float = 1e-9
    abs: float = 1e-12

    def threshold(self, scale: float) -> float:
        return self.rel * scale + self.abs


@dataclass(frozen=True)
class ZeroTest:
    value: complex
    scale: float
    threshold: float

    @property
    def magnitude(self) -> float:
        return abs(self.value)

    @property
    def is_zero(self) -> bool:
        return self.magnitude <= self.threshold

    @property
    def near_boundary(self) -> bool:
        # within a factor 10 of the threshold on either side
        return self.threshold / 10.0 < self.magnitude <= 10.0 * self.threshold

    def as_dict(self) -> dict:
        return {
            "abs": float(self.magnitude),
            "threshold": float(self.threshold),
            "is_zero": bool(self.is_zero),
            "near_boundary": bool(self.near_boundary),
        }


@dataclass(frozen=True)
class Triple:
    """Profiles f, g (complex) and q (real), all supported in [-1, 1].

    ``allow_dependent`` skips the independence check; only the solvers accept
    such triples (e.g. the free line f = g = 0), never the classifier.
    """

    f: Profile
    g: Profile
    q: Profile = field(default_factory=Profile.zero)
    allow_dependent: bool = field(default=False, compare=False)

    def __post_init__(self):
        for name in ("f", "g", "q"):
            p = getattr(self, name)
            if not isinstance(p, Profile):
                raise TypeError(f"{name} must be a Profile")
            lo, hi = p.support
            if lo < -1.0 or hi > 1.0:
                raise ProfileError(f"support of {name} must lie in [-1, 1], got [{lo}, {hi}]")
        if not self.q.is_real(0.0):
            raise ProfileError("q must be real-valued")
        if not self.allow_dependent:
            check_independent(self.f, self.g)

    @property
    def is_real(self) -> bool:
        return self.f.is_real() and self.g.is_real()


def check_independent(f: Profile, g: Profile) -> None:
    ff = inner(f, f).real
    gg = inner(g, g).real
    fg = inner(f, g)
    gram = ff * gg - abs(fg) ** 2
    if not gram > DEPENDENCE_TOL * ff * gg or ff == 0.0 or gg == 0.0:
        raise LinearDependence(
            f"f and g are linearly dependent (Gram determinant {gram:.3e}, "
            f"norms^2 {ff:.3e}, {gg:.3e})"
        )


def _phase(z: complex) -> float:
    """Principal argument folded into (-pi, pi]."""
    a = cmath.phase(z)
    return math.pi if a == -math.pi else a


@dataclass
class InvariantSet:
    f0: complex
    g0: complex
    f1: complex
    g1: complex
    n_f: float
    n_g: float
    p: complex
    pi_val: float
    lambda_val: float
    theta_phase: float
    omega: TailedProfile
    kappa: complex
    sigma: TailedProfile
    sigma_minus: complex
    sigma_plus: complex
    sigma_star: float
    hbs_sigma: TailedProfile
    hbs_sigma_minus: complex
    hbs_sigma_plus: complex
    hbs_sigma_star: float
    a0: float
    a1: complex
    a2: float
    f_f2: complex
    f_g2: complex
    g_f2: complex
    g_g2: complex
    lambda_norm2: float
    q_l1: float
    omega_sup: float
    tests: dict
    warnings: list

    @property
    def zero_means(self) -> bool:
        return self.tests["f0"].is_zero and self.tests["g0"].is_zero

    @property
    def a_applicable(self) -> bool:
        """a1 and a2 are defined only for zero-mean f and g."""
        return self.zero_means

    def kappa_from_moments(self) -> complex:
        return self.n_f * self.g1 - cmath.exp(1j * self.theta_phase) * self.n_g * self.f1

    def to_dict(self) -> dict:
        def c(z):
            z = complex(z)
            return [z.real, z.imag]

        return {
            "f0": c(self.f0),
            "g0": c(self.g0),
            "f1": c(self.f1),
            "g1": c(self.g1),
            "n_f": self.n_f,
            "n_g": self.n_g,
            "pi": self.pi_val,
            "lambda": self.lambda_val,
            "theta": self.theta_phase,
            "kappa": c(self.kappa),
            "sigma_minus": c(self.sigma_minus),
            "sigma_plus": c(self.sigma_plus),
            "sigma_star": self.sigma_star,
            "hbs_sigma_minus": c(self.hbs_sigma_minus),
            "hbs_sigma_plus": c(self.hbs_sigma_plus),
            "hbs_sigma_star": self.hbs_sigma_star,
            "a0": self.a0,
            "a1": c(self.a1) if self.a_applicable else None,
            "a2": self.a2 if self.a_applicable else None,
            "tests": {k: v.as_dict() for k, v in sorted(self.tests.items())},
            "warnings": list(self.warnings),
        }


def compute_invariants(t: Triple, tol: Tolerances = Tolerances()) -> InvariantSet:
    """Every scalar and functional resonance quantity of the triple."""
    if t.allow_dependent:
        check_independent(t.f, t.g)
    f, g, q = t.f, t.g, t.q
    f0, g0 = moment(f, 0), moment(g, 0)
    f1, g1 = moment(f, 1), moment(g, 1)
    F1, G1 = antiderivative(f, 1), antiderivative(g, 1)
    F2, G2 = antiderivative(f, 2), antiderivative(g, 2)

    n_f, n_g = l2norm(F1), l2norm(G1)
    p = inner(F1, G1)
    pi_val = n_f * n_g - abs(p + 1.0)

    mixed = g0 * F1.core - f0 * G1.core
    lambda_norm2 = l2norm(mixed) ** 2
    lambda_val = lambda_norm2 - 2.0 * (f0 * g0.conjugate()).real

    theta = _phase(p + 1.0) if abs(p + 1.0) > 0 else 0.0
    omega = F2 * (cmath.exp(1j * theta) * n_g) - G2 * n_f
    kappa = omega.tail_const

    f_f2, f_g2 = inner(f, F2), inner(f, G2)
    g_f2, g_g2 = inner(g, F2), inner(g, G2)
    sigma = (F2 * f0.conjugate()).plus_constant(-f_f2) * abs(g0) ** 2 - (
        G2 * g0.conjugate()
    ).plus_constant(-g_g2) * abs(f0) ** 2
    # sigma is constant left of -1: its value there is sigma(-1)
    sigma = TailedProfile(
        sigma.core, sigma.tail_const, sigma.tail_slope, complex(sigma.core(-1.0))
    )
    sigma_minus = complex(sigma.core(-1.0))
    sigma_plus = sigma.tail_const

    # The half-bound state for lambda = 0 and f0 g0 != 0: the same linear part
    # as sigma, with the constant fixed by the kernel of the lemma matrix
    # (average of the two row equations, which agree exactly when lambda = 0).
    c3 = 0.5 * (
        abs(f0) ** 2 * g_g2
        - abs(g0) ** 2 * f_f2
        + f0 * g0.conjugate() * (f_g2 - 1.0)
        - f0.conjugate() * g0 * (g_f2 - 1.0)
    )
    hbs = (F2 * (abs(g0) ** 2 * f0.conjugate()) - G2 * (abs(f0) ** 2 * g0.conjugate())).plus_constant(c3)
    if abs(hbs.tail_const) > 0:
        # rotate so the right limit is real and nonnegative
        hbs = hbs * (abs(hbs.tail_const) / hbs.tail_const)
    hbs = TailedProfile(hbs.core, hbs.tail_const, hbs.tail_slope, complex(hbs.core(-1.0)))
    hbs_minus = hbs.left_const
    hbs_plus = hbs.tail_const

    a0 = q.integral().real
    a1 = weighted_inner(Profile.constant(1.0), q, omega)
    a2 = weighted_inner(omega, q, omega).real
    sigma_star = weighted_inner(sigma, q, sigma).real
    hbs_star = weighted_inner(hbs, q, hbs).real

    q_l1 = q.l1_norm()
    omega_sup = omega.core.max_abs()
    f_scale = math.sqrt(2.0) * l2norm(f)
    g_scale = math.sqrt(2.0) * l2norm(g)
    sigma_scale = (
        abs(g0) ** 2 * (abs(f0) * F2.core.max_abs() + abs(f_f2))
        + abs(f0) ** 2 * (abs(g0) * G2.core.max_abs() + abs(g_g2))
        + abs(f0 * g0) * (abs(f_g2) + abs(g_f2) + 2.0)
    )

    def zt(value, scale):
        return ZeroTest(complex(value), float(scale), tol.threshold(scale))

    tests = {
        "f0": zt(f0, f_scale),
        "g0": zt(g0, g_scale),
        "lambda": zt(lambda_val, lambda_norm2 + 2.0 * abs(f0 * g0.conjugate()) + 1.0),
        "pi": zt(pi_val, n_f * n_g + abs(p) + 1.0),
        "kappa": zt(kappa, omega_sup),
        "a1": zt(a1, q_l1 * omega_sup),
        "a2_minus_kappabar_a1": zt(
            a2 - kappa.conjugate() * a1,
            abs(a2) + abs(kappa) * abs(a1) + q_l1 * omega_sup**2,
        ),
        "sigma_minus": zt(hbs_minus, sigma_scale),
        "sigma_plus": zt(hbs_plus, sigma_scale),
        "f0g1_minus_f1g0": zt(f0 * g1 - f1 * g0, abs(f0 * g1) + abs(f1 * g0) + 1.0),
    }
    warnings = [
        f"{name} = {test.magnitude:.3e} lies within a factor 10 of its zero threshold "
        f"{test.threshold:.3e}"
        for name, test in sorted(tests.items())
        if test.near_boundary
    ]
    return InvariantSet(
        f0=f0,
        g0=g0,
        f1=f1,
        g1=g1,
        n_f=n_f,
        n_g=n_g,
        p=p,
        pi_val=pi_val,
        lambda_val=lambda_val,
        theta_phase=theta,
        omega=omega,
        kappa=kappa,
        sigma=sigma,
        sigma_minus=sigma_minus,
        sigma_plus=sigma_plus,
        sigma_star=sigma_star,
        hbs_sigma=hbs,
        hbs_sigma_minus=hbs_minus,
        hbs_sigma_plus=hbs_plus,
        hbs_sigma_star=hbs_star,
        a0=a0,
        a1=a1,
        a2=a2,
        f_f2=f_f2,
        f_g2=f_g2,
        g_f2=g_f2,
        g_g2=g_g2,
        lambda_norm2=lambda_norm2,
        q_l1=q_l1,
        omega_sup=omega_sup,
        tests=tests,
        warnings=warnings,
    )


class HalfBoundKind(enum.Enum):
    NONE = "None"
    CONST_ONLY = "ConstOnly"
    SIGMA = "Sigma"
    DOUBLE = "Double"


@dataclass
class HalfBoundStateReport:
    kind: HalfBoundKind
    states: list
    residual: float
    residuals: list = field(default_factory=list)
    slopes: list = field(default_factory=list)


def resonance_kind(inv: InvariantSet) -> HalfBoundKind:
    if inv.zero_means:
        return HalfBoundKind.DOUBLE if inv.tests["pi"].is_zero else HalfBoundKind.CONST_ONLY
    if not inv.tests["lambda"].is_zero:
        return HalfBoundKind.NONE
    if not inv.tests["f0"].is_zero and not inv.tests["g0"].is_zero:
        return HalfBoundKind.SIGMA
    # exactly one zero mean with lambda = 0 contradicts linear independence
    return HalfBoundKind.NONE


def apply_model_operator(t: Triple, u) -> Profile:
    """``-u'' + (g, u) f + (f, u) g`` on [-1, 1] as a profile."""
    core = u.core if isinstance(u, TailedProfile) else u
    core = core.refine((-1.0, 1.0))
    return -core.derivative().derivative() + t.f * inner(t.g, core) + t.g * inner(t.f, core)


def half_bound_states(
    t: Triple, tol: Tolerances = Tolerances(), inv: InvariantSet | None = None
) -> HalfBoundStateReport:
    """Bounded solutions of ``B u = 0``, grouped by resonance kind."""
    inv = inv or compute_invariants(t, tol)
    kind = resonance_kind(inv)
    if kind is HalfBoundKind.NONE:
        states = []
    elif kind is HalfBoundKind.CONST_ONLY:
        states = [TailedProfile.constant(1.0)]
    elif kind is HalfBoundKind.DOUBLE:
        states = [TailedProfile.constant(1.0), inv.omega]
    else:
        states = [inv.hbs_sigma]
    residuals = [l2norm(apply_model_operator(t, u)) for u in states]
    slopes = [max(abs(u.derivative_at(-1.0)), abs(u.derivative_at(1.0))) for u in states]
    return HalfBoundStateReport(
        kind=kind,
        states=states,
        residual=max(residuals, default=0.0),
        residuals=residuals,
        slopes=slopes,
    )


def lemma_matrix(t: Triple, inv: InvariantSet | None = None):
    """The 3x3 matrix whose kernel parametrizes half-bound states, and its determinant."""
    inv = inv or compute_invariants(t)
    A = np.array(
        [
            [inv.f_f2, inv.f_g2 - 1.0, inv.f0.conjugate()],
            [inv.g_f2 - 1.0, inv.g_g2, inv.g0.conjugate()],
            [inv.f0, inv.g0, 0.0],
        ],
        dtype=complex,
    )
    return A, complex(np.linalg.det(A))


def tune_resonance(f: Profile, g: Profile) -> float:
    """Real t != 0 such that (f, t g) has lambda = 0.

    lambda(t) = t^2 ||g0 F - f0 G||^2 - 2 t Re(f0 conj(g0)), with F, G the
    first antiderivatives, so the nonzero root is 2 Re(f0 conj(g0)) / norm.
    """
    f0, g0 = moment(f, 0), moment(g, 0)
    if f0 == 0 and g0 == 0:
        raise ValueError("tune_resonance needs f0 != 0 or g0 != 0")
    mixed = g0 * antiderivative(f, 1).core - f0 * antiderivative(g, 1).core
    norm2 = l2norm(mixed) ** 2
    re = (f0 * g0.conjugate()).real
    if norm2 == 0.0 or re == 0.0:
        raise NoRoot(f"no nonzero real root (norm term {norm2:.3e}, Re(f0 conj g0) = {re:.3e})")
    return 2.0 * re / norm2


def normalize_support(t: Triple | tuple, r: float | None = None):
    """Rescale a triple supported in [-r, r] to [-1, 1].

    Returns the rescaled triple and the factor r; the operator family is
    unchanged when eps is replaced by r * eps, because
    f -> r^{3/2} f(r x), g -> r^{3/2} g(r x), q -> r q(r x).
    """
    f, g, q = (t.f, t.g, t.q) if isinstance(t, Triple) else t
    if r is None:
        r = max(abs(v) for p in (f, g, q) for v in p.support)
        r = max(r, 1e-300)
    s = r**1.5
    return Triple(f.scaled_argument(r) * s, g.scaled_argument(r) * s, q.scaled_argument(r) * r), r
