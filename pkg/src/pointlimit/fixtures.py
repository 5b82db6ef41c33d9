"""Builtin triples realizing every leaf (and every inbound path) of the classification graph.

Each fixture records the expected case tag and the graph path that reaches
it.  Tuned fixtures solve their tuning equations at construction time, so
the branch quantities sit on their zero sets to rounding accuracy.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .profiles import Profile, bump_even, bump_odd, inner
from .resonance import Triple, compute_invariants, tune_resonance

_SQ15 = math.sqrt(15.0)
_SQ105 = math.sqrt(105.0)


@dataclass(frozen=True)
class Fixture:
    name: str
    triple: Triple
    case: str
    path: str
    note: str


def _poly(c):
    return Profile.poly(c)


def double_pair():
    """f = F', g = G' with F, G the orthonormal even and odd bumps; kappa = sqrt(15)/3."""
    return _poly([0.0, -_SQ15 / 2.0]), _poly([_SQ105 / 4.0, 0.0, -3.0 * _SQ105 / 4.0])


def kappa_zero_pair():
    """f = F', g = G' with F, G = (even bump +- odd bump)/sqrt(2); omega is even and kappa = 0."""
    r = 1.0 / math.sqrt(2.0)
    F = (bump_even() + bump_odd()) * r
    G = (bump_even() - bump_odd()) * r
    return F.derivative(), G.derivative()


def _omega(f, g):
    return compute_invariants(Triple(f, g)).omega.core


def _a_moments(f, g, q):
    inv = compute_invariants(Triple(f, g, q))
    return inv.a1, inv.a2, inv.kappa


def _a3_double_potential():
    """Even quartic q = 1 + b x^2 + c x^4 with a1 = a2 = 0 for the kappa = 0 pair."""
    f, g = kappa_zero_pair()
    om = _omega(f, g)
    mono = [_poly([0.0] * k + [1.0]) for k in (0, 2, 4)]
    m1 = [inner(p, om).real for p in mono]
    m2 = [inner(p * om, om).real for p in mono]
    M = np.array([[m1[1], m1[2]], [m2[1], m2[2]]])
    b, c = np.linalg.solve(M, [-m1[0], -m2[0]])
    return _poly([1.0, 0.0, b, 0.0, c])


def _b3_double_potential():
    """q = 1 + b x^2 with a2 = 0 for the kappa = 0 pair (b = -11)."""
    f, g = kappa_zero_pair()
    om = _omega(f, g)
    m0 = inner(om, om).real
    m2 = inner(_poly([0.0, 0.0, 1.0]) * om, om).real
    return _poly([1.0, 0.0, -m0 / m2])


def _b1_robin_potential():
    """q = 1 + s x with a2 = conj(kappa) a1 for the double pair (linear in s)."""
    f, g = double_pair()

    def defect(s):
        a1, a2, k = _a_moments(f, g, _poly([1.0, s]))
        return (a2 - k.conjugate() * a1).real

    d0, d1 = defect(0.0), defect(1.0)
    return _poly([1.0, -d0 / (d1 - d0)])


def delta_prime_potential(shape: float = 1.0):
    """q = shape (x^2 - 1/3) + u x with a0 = 0 and a1 = 0 (u by a 1-D root find)."""
    f, g = double_pair()

    def a1_of(u):
        return _a_moments(f, g, _poly([-shape / 3.0, u, shape]))[0].real

    u = brentq(a1_of, -50.0, 50.0, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return _poly([-shape / 3.0, u, shape])


def pseudo_hamiltonian(alpha: float = 1.0, beta: float = 0.0) -> Triple:
    """f0 = alpha, g0 = 0, g1 = -1, a0 = beta."""
    q = Profile.constant(beta / 2.0)
    return Triple(Profile.constant(alpha / 2.0), _poly([0.0, -1.5]), q)


def _b2(sign: float) -> Triple:
    # sigma_plus vanishes at slope 5 (sigma_minus for the mirror image)
    g = _poly([1.0, 5.0 * sign])
    t = tune_resonance(Profile.constant(1.0), g)
    return Triple(Profile.constant(1.0), g * t, Profile.constant(1.0))


def _b3_sigma() -> Triple:
    # even f, g: f0 g1 = f1 g0 = 0, and the shape of g puts lambda and sigma_+- at zero
    g = _poly([30.0 / 7.0 * (0.5 - 21.0 / 12.0), 0.0, 30.0 / 7.0 * 21.0 / 4.0])
    return Triple(Profile.constant(0.5), g)


def _build():
    f1, g1 = double_pair()
    fk, gk = kappa_zero_pair()
    one = Profile.constant(1.0)
    items = [
        Fixture("a1_fixture", Triple(f1, g1, one), "A1", "double, a2 != conj(kappa) a1",
                "orthonormal bump antiderivatives, q = 1"),
        Fixture("a1_kappa0", Triple(fk, gk, one), "A1", "double, kappa = 0, a2 != 0",
                "omega is a bound state; unit diagonal"),
        Fixture("delta_prime", Triple(f1, g1, delta_prime_potential()), "A1",
                "double, a0 = a1 = 0", "classic delta-prime of strength kappa^2 / a2"),
        Fixture("a2_fixture", Triple(one, _poly([7.5, 7.5])), "A2", "sigma, sigma_- sigma_+ != 0",
                "f = 1, g = (15/2)(1 + x)"),
        Fixture("a3_fixture", Triple(_poly([0.0, 1.0]), _poly([1.0, 0.0, -3.0]), one), "A3",
                "zero means, pi != 0", "delta interaction of strength 2"),
        Fixture("a3_double", Triple(fk, gk, _a3_double_potential()), "A3",
                "double, kappa = a1 = a2 = 0", "even quartic q"),
        Fixture("b1_neumann", Triple(f1, g1), "B1", "double, q = 0", "Neumann-Neumann"),
        Fixture("b1_robin", Triple(f1, g1, _b1_robin_potential()), "B1",
                "double, a2 = conj(kappa) a1 != 0", "Robin-Robin"),
        Fixture("b2_right_dirichlet", _b2(1.0), "B2", "sigma, sigma_+ = 0",
                "Robin on the left, Dirichlet on the right"),
        Fixture("b2_left_dirichlet", _b2(-1.0), "B2", "sigma, sigma_- = 0",
                "Dirichlet on the left, Robin on the right"),
        Fixture("b3_lambda", Triple(Profile.constant(0.5), _poly([0.0, 1.0])), "B3", "lambda != 0",
                "f = 1/2, g = x"),
        Fixture("pseudo_hamiltonian", pseudo_hamiltonian(1.0), "B3", "lambda != 0",
                "alpha = 1, beta = 0"),
        Fixture("b3_sigma", _b3_sigma(), "B3", "sigma, sigma_- = sigma_+ = 0, f0 g1 = f1 g0",
                "even f and g"),
        Fixture("b3_double", Triple(fk, gk, _b3_double_potential()), "B3",
                "double, kappa = a2 = 0, a1 != 0", "q = 1 - 11 x^2"),
    ]
    return {fx.name: fx for fx in items}


_REGISTRY = None


def registry() -> dict:
    global _REGISTRY
    if _REGISTRY is None:
        _REGISTRY = _build()
    return _REGISTRY


def free_line() -> Triple:
    """f = g = q = 0 (solvers only)."""
    z = Profile.zero()
    return Triple(z, z, z, allow_dependent=True)


def builtin(spec: str) -> Triple:
    """Triple for ``"name"`` or ``"name key=value ..."`` (parameters for pseudo_hamiltonian)."""
    parts = spec.split()
    if not parts:
        raise KeyError("empty fixture name")
    name, params = parts[0], {}
    for item in parts[1:]:
        key, sep, value = item.partition("=")
        if not sep:
            raise KeyError(f"fixture parameter {item!r} is not key=value")
        params[key] = float(value)
    if name == "free":
        return free_line()
    if name == "pseudo_hamiltonian":
        unknown = set(params) - {"alpha", "beta"}
        if unknown:
            raise KeyError(f"unknown pseudo_hamiltonian parameters {sorted(unknown)}")
        return pseudo_hamiltonian(params.get("alpha", 1.0), params.get("beta", 0.0))
    if params:
        raise KeyError(f"fixture {name!r} takes no parameters")
    reg = registry()
    if name not in reg:
        raise KeyError(f"unknown fixture {name!r}; known: {sorted(reg) + ['free']}")
    return reg[name].triple
