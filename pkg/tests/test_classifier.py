import dataclasses
import json
import math
from types import SimpleNamespace

import numpy as np
import pytest
import sympy as sp
from conftest import random_double_pair, random_poly, random_triple, random_tuned_triple

from pointlimit.classifier import (
    BoundaryCondition,
    CaseTag,
    LimitInteraction,
    canonicalize,
    classify,
    matrix_A1,
    matrix_A2,
    separated_B1,
    separated_B2,
)
from pointlimit.errors import (
    DegenerateDenominator,
    LinearDependence,
    NonRealSigmaPlus,
    UnreachableBranch,
    UnstableClassification,
)
from pointlimit.fixtures import kappa_zero_pair, registry
from pointlimit.profiles import Profile
from pointlimit.resonance import Triple, compute_invariants, normalize_support, resonance_kind

X = sp.symbols("x", real=True)


def test_every_fixture_classifies_as_expected():
    for name, fx in registry().items():
        out = classify(fx.triple)
        assert out.case.value == fx.case, name
        if out.connected:
            assert abs(np.linalg.det(out.matrix) - 1) <= 1e-10
            assert -math.pi < out.phase <= math.pi


def test_pseudo_hamiltonian_pair_is_dirichlet_dirichlet():
    out = classify(Triple(Profile.constant(0.5), Profile.poly([0.0, 1.0]), Profile.constant(3.0)))
    assert out.case is CaseTag.B3 and out.kind == "separated"
    assert out.left.is_dirichlet and out.right.is_dirichlet


def test_delta_fixture():
    out = classify(Triple(Profile.poly([0.0, 1.0]), Profile.poly([1.0, 0.0, -3.0]), Profile.constant(1.0)))
    assert out.case is CaseTag.A3
    assert out.phase == 0
    assert np.allclose(out.matrix, [[1, 0], [2, 1]], atol=1e-14)


def test_a2_fixture_uses_true_half_bound_state():
    out = classify(Triple(Profile.constant(1.0), Profile.poly([7.5, 7.5])))
    assert out.case is CaseTag.A2
    assert out.phase == pytest.approx(math.pi)
    assert np.allclose(out.matrix, [[2 / 3, 0], [0, 1.5]], atol=1e-12)


def test_a1_fixture_against_symbolic_moments():
    fx = -sp.sqrt(15) / 2 * X
    gx = sp.sqrt(105) / 4 * (1 - 3 * X**2)
    s = sp.symbols("s", real=True)
    F2 = sp.integrate((X - s) * fx.subs(X, s), (s, -1, X))
    G2 = sp.integrate((X - s) * gx.subs(X, s), (s, -1, X))
    omega = F2 - G2  # n_f = n_g = 1, theta = 0
    kappa = sp.simplify(omega.subs(X, 1))
    a0 = sp.Integer(2)
    a1 = sp.simplify(sp.integrate(omega, (X, -1, 1)))
    a2 = sp.simplify(sp.integrate(omega**2, (X, -1, 1)))
    assert sp.simplify(a1 - (sp.sqrt(15) / 3 + sp.sqrt(105) / 15)) == 0
    assert sp.N(a2 - kappa * a1) != 0
    d = abs(a2 - kappa * a1)
    ref = np.array(
        [[float((kappa**2 * a0 - 2 * kappa * a1 + a2) / d), float(kappa**2 / d)],
         [float((a0 * a2 - a1**2) / d), float(a2 / d)]]
    )
    phase = 0.0 if float(a2 - kappa * a1) > 0 else math.pi
    ref_phase, ref = canonicalize(phase, ref)
    out = classify(registry()["a1_fixture"].triple)
    assert out.case is CaseTag.A1
    assert out.phase == pytest.approx(ref_phase)
    assert np.allclose(out.matrix, ref, rtol=1e-12, atol=1e-12)


def test_delta_prime_fixture_matrix():
    inv = compute_invariants(registry()["delta_prime"].triple)
    assert abs(inv.a1) < 1e-12 and abs(inv.a0) < 1e-14
    phase, C = matrix_A1(inv)
    beta = abs(inv.kappa) ** 2 / inv.a2
    assert phase == 0
    assert np.allclose(C, [[1, beta], [0, 1]], atol=1e-10)


def test_exotic_a1_pattern():
    inv = SimpleNamespace(kappa=1.0 + 0j, a0=3.0, a1=1.0 + 0j, a2=0.0, tests={})
    phase, C = matrix_A1(inv)
    assert C[1, 1] == 0
    assert C[0, 1] * C[1, 0] == pytest.approx(-1.0)
    assert abs(np.linalg.det(C) - 1) < 1e-14


def test_kappa_zero_branch_has_unit_diagonal():
    out = classify(registry()["a1_kappa0"].triple)
    assert abs(out.matrix[0, 1]) < 1e-12
    assert np.allclose(np.abs(np.diag(out.matrix)), 1.0)


def test_matrix_A2_examples():
    phase, C = matrix_A2(sigma_minus=-60.0, sigma_plus=240.0, sigma_star=0.0)
    assert phase == pytest.approx(math.pi)
    assert np.allclose(C, np.diag([4.0, 0.25]))
    phase, C = matrix_A2(sigma_minus=5.0, sigma_plus=5.0, sigma_star=0.0)
    assert phase == 0 and np.allclose(C, np.eye(2))
    phase, C = matrix_A2(sigma_minus=5.0, sigma_plus=5.0, sigma_star=2.0)
    assert np.allclose(C, [[1, 0], [2 / 25, 1]])
    with pytest.raises(NonRealSigmaPlus):
        matrix_A2(sigma_minus=1.0, sigma_plus=1.0 + 1e-3j, sigma_star=0.0)


def test_separated_formulas():
    left, right = separated_B1(SimpleNamespace(kappa=2.0, a2=4.0, a0=1.0))
    assert left.theta == 0 and right.theta == 1
    left, right = separated_B2(sigma_minus=0.0, sigma_plus=240.0, sigma_star=3.0)
    assert left.is_dirichlet and right.theta == pytest.approx(3 / 240**2)
    left, right = separated_B2(sigma_minus=-60.0, sigma_plus=0.0, sigma_star=3.0)
    assert right.is_dirichlet and left.theta == pytest.approx(-3 / 3600)
    with pytest.raises(DegenerateDenominator):
        separated_B2(sigma_minus=1.0, sigma_plus=1.0, sigma_star=0.0)


def test_b1_neumann_fixture():
    out = classify(registry()["b1_neumann"].triple)
    assert out.left.theta == 0 and out.right.theta == 0


def test_b2_fixtures_sides():
    right = classify(registry()["b2_right_dirichlet"].triple)
    assert right.right.is_dirichlet and not right.left.is_dirichlet
    left = classify(registry()["b2_left_dirichlet"].triple)
    assert left.left.is_dirichlet and not left.right.is_dirichlet
    assert left.right.theta == pytest.approx(-right.left.theta, rel=1e-9)


def test_canonicalize_folds_sign():
    C = np.array([[2.0, 1.0], [1.0, 1.0]])
    a = canonicalize(0.3, C)
    b = canonicalize(0.3 + math.pi, -C)
    assert a[0] == pytest.approx(b[0]) and np.allclose(a[1], b[1])
    phase, C2 = canonicalize(-math.pi, C)
    assert phase == pytest.approx(math.pi)
    phase, C3 = canonicalize(0.0, -np.eye(2))
    assert phase == pytest.approx(math.pi) and np.allclose(C3, np.eye(2))


def test_json_round_trip():
    for fx in registry().values():
        out = classify(fx.triple)
        doc = json.loads(json.dumps(out.to_dict()))
        back = LimitInteraction.from_dict(doc)
        assert back.to_dict() == out.to_dict()


def test_strict_mode_on_near_boundary_lambda():
    g = Profile.poly([1.0, 1.0]) * (7.5 * (1 + 6e-9))
    t = Triple(Profile.constant(1.0), g)
    out = classify(t)
    assert out.warnings and "lambda" in out.margins
    with pytest.raises(UnstableClassification) as err:
        classify(t, strict=True)
    assert "lambda" in err.value.margins


def test_unreachable_node_asserted():
    inv = compute_invariants(Triple(Profile.constant(1.0), Profile.poly([7.5, 7.5])))
    tests = dict(inv.tests)
    tests["f0"] = dataclasses.replace(tests["f0"], value=0j)
    fake = dataclasses.replace(inv, tests=tests)
    with pytest.raises(UnreachableBranch):
        classify(None, inv=fake)


def test_dependent_pair_rejected():
    with pytest.raises(LinearDependence):
        classify(Triple(Profile.constant(1.0), Profile.constant(2.0)))


def test_forbidden_shape_never_produced(rng):
    fk, gk = kappa_zero_pair()
    for _ in range(40):
        q = random_poly(rng, 4, False)
        out = classify(Triple(fk, gk, q))
        if out.case is CaseTag.A1:
            assert abs(out.matrix[0, 1]) < 1e-10
            assert np.allclose(np.abs(np.diag(out.matrix)), 1.0, atol=1e-10)
    for _ in range(40):
        f, g = random_double_pair(rng, complex_=bool(rng.integers(2)))
        out = classify(Triple(f, g, random_poly(rng, 4, False)))
        if out.case is CaseTag.A1 and abs(out.matrix[0, 1]) < 1e-10:
            assert np.allclose(np.abs(np.diag(out.matrix)), 1.0, atol=1e-10)


def test_scaling_invariance():
    for name in ("a1_fixture", "a2_fixture", "a3_fixture", "b1_robin", "b2_right_dirichlet", "b3_lambda"):
        t = registry()[name].triple
        # shrink to [-1/2, 1/2]; the shrunk triple generates the same family with eps/2
        small, _ = normalize_support(t, 2.0)
        a, b = classify(t), classify(small)
        assert a.case == b.case, name
        if a.connected:
            assert a.phase == pytest.approx(b.phase, abs=1e-9)
            assert np.allclose(a.matrix, b.matrix, atol=1e-9, rtol=1e-9)
        else:
            for x, y in ((a.left, b.left), (a.right, b.right)):
                assert x.is_dirichlet == y.is_dirichlet
                if not x.is_dirichlet:
                    assert x.theta == pytest.approx(y.theta, abs=1e-9, rel=1e-9)


def test_branch_exhaustiveness(rng):
    # generic, tuned, zero-mean and double-resonant populations
    counts = {}
    for i in range(10_000):
        kind = i % 4
        if kind == 0:
            t = random_triple(rng)
        elif kind == 1:
            t = random_tuned_triple(rng)
        elif kind == 2:
            f, g = random_double_pair(rng, complex_=bool(i % 8 == 2))
            t = Triple(f, g, random_poly(rng, 3, False))
        else:
            t = random_triple(rng)
            try:
                t = Triple(t.f - Profile.constant(t.f.integral() / 2),
                           t.g - Profile.constant(t.g.integral() / 2), t.q)
            except LinearDependence:
                continue
        inv = compute_invariants(t)
        out = classify(t, inv=inv)
        assert isinstance(out.case, CaseTag)
        resonance_kind(inv)
        counts[out.case] = counts.get(out.case, 0) + 1
    assert {CaseTag.A1, CaseTag.A2, CaseTag.A3, CaseTag.B3} <= set(counts)


def test_boundary_condition_dict():
    assert BoundaryCondition.from_dict({"type": "neumann"}).theta == 0
    assert BoundaryCondition.from_dict({"type": "dirichlet"}).is_dirichlet
    with pytest.raises(ValueError):
        BoundaryCondition.from_dict({"type": "periodic"})


def test_canonicalize_ignores_rounding_sized_lead():
    C = np.array([[-1e-17, 1.0], [-1.0, 2.0]])
    phase, C2 = canonicalize(0.0, C)
    assert phase == 0 and C2[0, 1] == 1.0
