import numpy as np
import pytest

from pointlimit.errors import LinearDependence, NoRoot
from pointlimit.profiles import Profile, inner, l2norm
from pointlimit.resonance import Triple, tune_resonance


def random_poly(rng, max_degree=6, complex_=True):
    n = int(rng.integers(0, max_degree + 1)) + 1
    c = rng.normal(size=n)
    if complex_:
        c = c + 1j * rng.normal(size=n)
    return Profile.poly(c)


def random_triple(rng, complex_=True):
    """Independent random f, g of degree <= 6 and a real q."""
    while True:
        f = random_poly(rng, 6, complex_)
        g = random_poly(rng, 6, complex_)
        q = random_poly(rng, 6, False)
        try:
            return Triple(f, g, q)
        except LinearDependence:
            continue


def random_tuned_triple(rng, complex_=True):
    """Random triple rescaled so that lambda = 0 (single resonance)."""
    while True:
        t = random_triple(rng, complex_)
        try:
            s = tune_resonance(t.f, t.g)
        except NoRoot:
            continue
        if not 1e-3 < abs(s) < 1e3:
            continue
        try:
            return Triple(t.f, t.g * s, t.q)
        except LinearDependence:
            continue


def random_double_pair(rng, complex_=True):
    """f = F', g = G' with F, G orthonormal and vanishing at +-1 (so pi = 0)."""
    bump = Profile.poly([1.0, 0.0, -1.0])
    while True:
        F = random_poly(rng, 4, complex_) * bump
        G = random_poly(rng, 4, complex_) * bump
        F = F * (1.0 / l2norm(F))
        G = G - F * inner(F, G)
        if l2norm(G) > 1e-2 * l2norm(F):
            G = G * (1.0 / l2norm(G))
            return F.derivative(), G.derivative()


@pytest.fixture
def rng():
    return np.random.default_rng(20260419)


def random_zero_mean_triple(rng, complex_=True):
    """Random f, g with vanishing means (constant half-bound state only, generically)."""
    while True:
        f = random_poly(rng, 6, complex_)
        g = random_poly(rng, 6, complex_)
        f = f - Profile.constant(f.integral() / 2)
        g = g - Profile.constant(g.integral() / 2)
        try:
            return Triple(f, g, random_poly(rng, 4, False))
        except LinearDependence:
            continue
