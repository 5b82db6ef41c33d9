import math

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from pointlimit.errors import ProfileError
from pointlimit.profiles import (
    Profile,
    TailedProfile,
    antiderivative,
    bump_even,
    bump_odd,
    from_literal,
    inner,
    l2norm,
    moment,
    parse_number,
)

X = sp.symbols("x", real=True)

coeff = st.floats(-5, 5, allow_nan=False, allow_infinity=False)
cpoly = st.lists(st.tuples(coeff, coeff), min_size=1, max_size=7).map(
    lambda c: [complex(a, b) for a, b in c]
)


def sym_poly(coeffs):
    return sum(sp.nsimplify(c.real) * X**j + sp.I * sp.nsimplify(c.imag) * X**j
               for j, c in enumerate(coeffs))


def test_moment_examples():
    assert moment(Profile.constant(1.0), 0) == pytest.approx(2.0)
    assert moment(Profile.poly([0.0, 1.0]), 1) == pytest.approx(2.0 / 3.0)
    f = Profile.poly([0.0, -math.sqrt(15) / 2])
    oracle = sp.integrate(X * (-sp.sqrt(15) / 2 * X), (X, -1, 1))
    assert abs(moment(f, 1) - float(oracle)) < 1e-15
    assert abs(moment(f, 1) + math.sqrt(15) / 3) < 1e-15


def test_moment_rejects_bad_order():
    with pytest.raises(ValueError):
        moment(Profile.constant(1.0), 2)


def test_antiderivative_of_one():
    a1 = antiderivative(Profile.constant(1.0), 1)
    assert a1.tail_const == 2 and a1.tail_slope == 0
    xs = np.linspace(-1, 1, 9)
    assert np.allclose(a1(xs), xs + 1)
    a2 = antiderivative(Profile.constant(1.0), 2)
    assert np.allclose(a2(xs), (xs + 1) ** 2 / 2)
    # tail 2x - 0 beyond the support
    assert np.allclose(a2(np.array([1.5, 3.0])), [3.0, 6.0])
    assert a2(np.array([-4.0]))[0] == 0


def test_antiderivative_second_order_oracle():
    f = Profile.poly([0.0, -math.sqrt(15) / 2])
    F2 = antiderivative(f, 2)
    s = sp.symbols("s", real=True)
    fs = -sp.sqrt(15) / 2 * s
    oracle = sp.integrate((1 - s) * fs, (s, -1, 1))
    assert sp.simplify(oracle - sp.sqrt(15) / 3) == 0
    assert abs(F2(np.array([1.0]))[0] - float(oracle)) < 1e-14
    assert F2.continuity_defect() < 1e-14


def test_antiderivative_degree_cap():
    p = Profile.poly(np.ones(17))
    with pytest.raises(ProfileError):
        antiderivative(p, 2)


def test_inner_examples():
    x = Profile.poly([0.0, 1.0])
    assert inner(x, x) == pytest.approx(2.0 / 3.0)
    assert inner(Profile.constant(1j), Profile.constant(1.0)) == pytest.approx(-2j)
    assert abs(inner(bump_even(), bump_odd())) < 1e-16


def test_bump_norms_oracle():
    e = sp.sqrt(15) / 4 * (1 - X**2)
    o = sp.sqrt(105) / 4 * X * (1 - X**2)
    assert sp.integrate(e**2, (X, -1, 1)) == 1
    assert sp.integrate(o**2, (X, -1, 1)) == 1
    assert l2norm(bump_even()) == pytest.approx(1.0, abs=1e-15)
    assert l2norm(bump_odd()) == pytest.approx(1.0, abs=1e-15)
    assert l2norm(Profile.zero()) == 0.0


def test_evaluation_outside_support_is_exact_zero():
    p = Profile.poly([3.0, 1.0, 2.0], -0.5, 0.25)
    assert np.all(p(np.array([-1.0, -0.51, 0.26, 0.9])) == 0)


def test_breakpoints_must_increase():
    with pytest.raises(ProfileError):
        Profile([0.0, 0.0], [[1.0]])
    with pytest.raises(ProfileError):
        Profile([0.0, 1.0], [[1.0], [2.0]])


@settings(max_examples=60, deadline=None)
@given(cpoly, cpoly)
def test_integration_by_parts(v, w):
    # zero-mean profiles: (v, W2) = -(V1, W1)
    v = Profile.poly(v)
    w = Profile.poly(w)
    v = v - Profile.constant(moment(v, 0) / 2)
    w = w - Profile.constant(moment(w, 0) / 2)
    lhs = inner(v, antiderivative(w, 2))
    rhs = -inner(antiderivative(v, 1), antiderivative(w, 1))
    scale = 1.0 + l2norm(v) * l2norm(antiderivative(w, 2).core)
    assert abs(lhs - rhs) <= 1e-12 * scale


@settings(max_examples=60, deadline=None)
@given(cpoly)
def test_antiderivative_end_values(c):
    p = Profile.poly(c)
    p0, p1 = moment(p, 0), moment(p, 1)
    assert abs(antiderivative(p, 1)(np.array([1.0]))[0] - p0) <= 1e-12 * (1 + abs(p0))
    assert abs(antiderivative(p, 2)(np.array([1.0]))[0] - (p0 - p1)) <= 1e-12 * (1 + abs(p0) + abs(p1))


@settings(max_examples=40, deadline=None)
@given(cpoly, cpoly, st.tuples(coeff, coeff), st.tuples(coeff, coeff))
def test_moment_linearity(a, b, al, be):
    pa, pb = Profile.poly(a), Profile.poly(b)
    al, be = complex(*al), complex(*be)
    for k in (0, 1):
        lhs = moment(pa * al + pb * be, k)
        rhs = al * moment(pa, k) + be * moment(pb, k)
        assert abs(lhs - rhs) <= 1e-12 * (1 + abs(al) * 50 + abs(be) * 50)


def test_moment_against_sympy_piecewise():
    p = Profile([-1.0, 0.0, 0.5], [[1.0, 2.0], [0.5j, 0.0, 3.0]])
    oracle0 = sp.integrate(1 + 2 * X, (X, -1, 0)) + sp.integrate(sp.I / 2 + 3 * X**2, (X, 0, sp.Rational(1, 2)))
    oracle1 = sp.integrate(X * (1 + 2 * X), (X, -1, 0)) + sp.integrate(
        X * (sp.I / 2 + 3 * X**2), (X, 0, sp.Rational(1, 2)))
    assert abs(moment(p, 0) - complex(oracle0)) < 1e-15
    assert abs(moment(p, 1) - complex(oracle1)) < 1e-15


def test_tailed_constant():
    one = TailedProfile.constant(2.0)
    assert np.allclose(one(np.array([-3.0, 0.0, 5.0])), 2.0)
    assert one.left_value() == 2 and one.right_value() == 2


def test_literals():
    assert parse_number("1/3") == pytest.approx(1 / 3)
    assert parse_number([1, "-1/2"]) == complex(1, -0.5)
    with pytest.raises(ProfileError):
        parse_number("abc")
    p = from_literal([{"lo": -1, "hi": 0, "coeffs": [1]}, {"lo": 0, "hi": 1, "coeffs": [[0, 1], 2]}])
    assert np.allclose(p(np.array([-0.5, 0.5])), [1.0, 1j + 1.0])
    assert np.allclose(from_literal("poly [0, 1]")(np.array([0.3])), 0.3)
    assert np.allclose(from_literal("const 1/2")(np.array([0.0])), 0.5)
    assert from_literal("bump_odd").degree == 3
    with pytest.raises(ProfileError, match="coeffs"):
        from_literal([{"lo": -1, "hi": 1, "coeffs": "x"}])
    with pytest.raises(ProfileError, match="missing"):
        from_literal([{"lo": -1, "coeffs": [1]}])
    with pytest.raises(ProfileError):
        from_literal("sinc 3")
