"""Compactly supported piecewise-polynomial functions with exact quadrature.

A :class:`Profile` is a complex piecewise polynomial on a strictly increasing
grid, identically zero outside the grid.  Coefficients are stored in the
monomial basis of the global coordinate, ascending powers.  Integrals of
profiles and of products of profiles are exact up to rounding: closed-form
antiderivatives for moments, Gauss-Legendre rules of sufficient order for
products.

A :class:`TailedProfile` extends a profile on [-1, 1] by a constant on the
left and by an affine function on the right.  Antiderivatives of profiles supported in
[-1, 1] are tailed profiles.
"""

from __future__ import annotations

import math
from functools import lru_cache
from numbers import Number

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import ProfileError

MAX_DEGREE = 16
UNIT = (-1.0, 1.0)

_SQRT15 = math.sqrt(15.0)
_SQRT105 = math.sqrt(105.0)


def _fsum_complex(values) -> complex:
    values = np.asarray(values, dtype=complex)
    return complex(math.fsum(values.real), math.fsum(values.imag))


def _trim(c: np.ndarray) -> np.ndarray:
    c = np.asarray(c, dtype=complex)
    nz = np.nonzero(c)[0]
    if len(nz) == 0:
        return np.zeros(1, dtype=complex)
    return c[: nz[-1] + 1]


def _poly_integral(c: np.ndarray, a: float, b: float) -> complex:
    """Exact integral of sum c_j x^j over [a, b] with compensated summation."""
    j = np.arange(1, len(c) + 1)
    terms = c * (np.power(b, j) - np.power(a, j)) / j
    return _fsum_complex(terms)


@lru_cache(maxsize=None)
def _gauss_cached(n: int):
    x, w = np.polynomial.legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def _gauss(n: int):
    return _gauss_cached(max(int(n), 1))


class Profile:
    """Piecewise polynomial, zero outside ``[breakpoints[0], breakpoints[-1]]``.

    Parameters
    ----------
    breakpoints : sequence of float
        Strictly increasing, at least two entries.
    pieces : sequence of sequences of complex
        One ascending coefficient list per interval, degree <= 16.
    """

    __slots__ = ("_bp", "_c")

    def __init__(self, breakpoints, pieces):
        bp = np.asarray(breakpoints, dtype=float)
        if bp.ndim != 1 or len(bp) < 2:
            raise ProfileError("a profile needs at least one interval")
        if not np.all(np.isfinite(bp)):
            raise ProfileError("breakpoints must be finite")
        if np.any(np.diff(bp) <= 0):
            raise ProfileError("breakpoints must be strictly increasing")
        pieces = list(pieces)
        if len(pieces) != len(bp) - 1:
            raise ProfileError(
                f"{len(bp) - 1} intervals but {len(pieces)} coefficient lists"
            )
        trimmed = [_trim(p) for p in pieces]
        deg = max(len(p) for p in trimmed) - 1
        if deg > MAX_DEGREE:
            raise ProfileError(f"degree {deg} exceeds the cap {MAX_DEGREE}")
        c = np.zeros((len(trimmed), deg + 1), dtype=complex)
        for i, p in enumerate(trimmed):
            if not np.all(np.isfinite(p)):
                raise ProfileError("coefficients must be finite")
            c[i, : len(p)] = p
        bp.setflags(write=False)
        c.setflags(write=False)
        self._bp = bp
        self._c = c

    # -- constructors -----------------------------------------------------
    @classmethod
    def constant(cls, value, lo=-1.0, hi=1.0) -> "Profile":
        return cls([lo, hi], [[value]])

    @classmethod
    def poly(cls, coeffs, lo=-1.0, hi=1.0) -> "Profile":
        return cls([lo, hi], [coeffs])

    @classmethod
    def indicator(cls, lo, hi) -> "Profile":
        return cls([lo, hi], [[1.0]])

    @classmethod
    def zero(cls) -> "Profile":
        return cls([-1.0, 1.0], [[0.0]])

    # -- basic access -----------------------------------------------------
    @property
    def breakpoints(self) -> np.ndarray:
        return self._bp

    @property
    def coeffs(self) -> np.ndarray:
        return self._c

    @property
    def pieces(self) -> list:
        return [_trim(row) for row in self._c]

    @property
    def degree(self) -> int:
        return self._c.shape[1] - 1

    @property
    def support(self) -> tuple:
        return float(self._bp[0]), float(self._bp[-1])

    def is_real(self, tol: float = 0.0) -> bool:
        return bool(np.max(np.abs(self._c.imag)) <= tol)

    def __repr__(self):
        return f"Profile(breakpoints={self._bp.tolist()}, pieces={[p.tolist() for p in self.pieces]})"

    # -- evaluation -------------------------------------------------------
    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        out = np.zeros(x.shape, dtype=complex)
        inside = (x >= self._bp[0]) & (x <= self._bp[-1])
        if np.any(inside):
            xi = x[inside]
            idx = np.clip(np.searchsorted(self._bp, xi, side="right") - 1, 0, len(self._c) - 1)
            # Horner over the padded coefficient table
            acc = np.zeros(xi.shape, dtype=complex)
            for j in range(self.degree, -1, -1):
                acc = acc * xi + self._c[idx, j]
            out[inside] = acc
        return out[0] if scalar else out

    def piece_at(self, x: float) -> np.ndarray:
        """Coefficients of the piece used for evaluation at ``x``."""
        i = int(np.clip(np.searchsorted(self._bp, x, side="right") - 1, 0, len(self._c) - 1))
        return self._c[i]

    # -- structure --------------------------------------------------------
    def refine(self, grid) -> "Profile":
        """Same function on the union of its grid with ``grid``.

        Points of ``grid`` outside the current support extend the grid with
        zero pieces.
        """
        grid = np.union1d(self._bp, np.asarray(grid, dtype=float))
        pieces = []
        for a, b in zip(grid[:-1], grid[1:]):
            m = 0.5 * (a + b)
            if m < self._bp[0] or m > self._bp[-1]:
                pieces.append([0.0])
            else:
                pieces.append(self.piece_at(m))
        return Profile(grid, pieces)

    def _aligned(self, other: "Profile"):
        grid = np.union1d(self._bp, other._bp)
        return self.refine(grid), other.refine(grid), grid

    def conj(self) -> "Profile":
        return Profile(self._bp, np.conj(self._c))

    @property
    def real(self) -> "Profile":
        return Profile(self._bp, self._c.real)

    def derivative(self) -> "Profile":
        return Profile(self._bp, [P.polyder(row) if len(row) > 1 else [0.0] for row in self._c])

    def scaled_argument(self, r: float) -> "Profile":
        """The profile ``x -> p(r x)`` for ``r > 0``."""
        if r <= 0:
            raise ProfileError("scale must be positive")
        powers = r ** np.arange(self._c.shape[1])
        return Profile(self._bp / r, self._c * powers)

    # -- arithmetic -------------------------------------------------------
    def __add__(self, other):
        if isinstance(other, Profile):
            a, b, grid = self._aligned(other)
            n = max(a._c.shape[1], b._c.shape[1])
            c = np.zeros((len(grid) - 1, n), dtype=complex)
            c[:, : a._c.shape[1]] += a._c
            c[:, : b._c.shape[1]] += b._c
            return Profile(grid, c)
        return NotImplemented

    __radd__ = __add__

    def __neg__(self):
        return Profile(self._bp, -self._c)

    def __sub__(self, other):
        if isinstance(other, Profile):
            return self + (-other)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, Number):
            return Profile(self._bp, self._c * complex(other))
        if isinstance(other, Profile):
            a, b, grid = self._aligned(other)
            return Profile(grid, [P.polymul(x, y) for x, y in zip(a._c, b._c)])
        return NotImplemented

    def __rmul__(self, other):
        if isinstance(other, Number):
            return self * other
        return NotImplemented

    def __truediv__(self, other):
        if isinstance(other, Number):
            return self * (1.0 / complex(other))
        return NotImplemented

    # -- quadrature -------------------------------------------------------
    def integral(self) -> complex:
        return _fsum_complex(
            [_poly_integral(row, a, b) for row, a, b in zip(self._c, self._bp[:-1], self._bp[1:])]
        )

    def max_abs(self, samples_per_piece: int = 64) -> float:
        """Sup norm estimated on a fine per-piece grid (used only for scales)."""
        vals = [0.0]
        for a, b, row in zip(self._bp[:-1], self._bp[1:], self._c):
            x = np.linspace(a, b, samples_per_piece)
            vals.append(float(np.max(np.abs(P.polyval(x, row)))))
        return max(vals)

    def l1_norm(self, nodes: int = 64) -> float:
        """Gauss approximation of the L1 norm (used only for threshold scales)."""
        xg, wg = _gauss(nodes)
        total = 0.0
        for a, b, row in zip(self._bp[:-1], self._bp[1:], self._c):
            x = 0.5 * (b - a) * xg + 0.5 * (a + b)
            total += 0.5 * (b - a) * float(np.sum(wg * np.abs(P.polyval(x, row))))
        return total


def _as_profile(u) -> Profile:
    if isinstance(u, TailedProfile):
        return u.core
    if isinstance(u, Profile):
        return u
    raise TypeError(f"expected Profile or TailedProfile, got {type(u).__name__}")


def _product_integral(parts, lo=None, hi=None) -> complex:
    """Exact integral over [lo, hi] of a product of profiles (first factor conjugated)."""
    grid = parts[0].breakpoints
    for p in parts[1:]:
        grid = np.union1d(grid, p.breakpoints)
    s_lo = max(p.support[0] for p in parts)
    s_hi = min(p.support[1] for p in parts)
    if lo is not None:
        s_lo = max(s_lo, lo)
    if hi is not None:
        s_hi = min(s_hi, hi)
    if s_hi <= s_lo:
        return 0j
    grid = grid[(grid > s_lo) & (grid < s_hi)]
    grid = np.concatenate([[s_lo], grid, [s_hi]])
    deg = sum(p.degree for p in parts)
    xg, wg = _gauss(deg // 2 + 2)
    total = []
    for a, b in zip(grid[:-1], grid[1:]):
        x = 0.5 * (b - a) * xg + 0.5 * (a + b)
        vals = np.conj(parts[0](x))
        for p in parts[1:]:
            vals = vals * p(x)
        total.append(0.5 * (b - a) * np.sum(wg * vals))
    return _fsum_complex(total)


class TailedProfile:
    """Function on the line: ``left_const`` for x < -1, ``core`` on [-1, 1],
    affine for x > 1.

    The right tail is ``tail_const + tail_slope * (x - 1)``; continuity at 1
    means ``core(1) == tail_const``.  Antiderivatives have ``left_const == 0``;
    half-bound states such as the constant 1 extend by a nonzero left constant.
    """

    __slots__ = ("core", "tail_const", "tail_slope", "left_const")

    def __init__(
        self,
        core: Profile,
        tail_const: complex,
        tail_slope: complex = 0.0,
        left_const: complex = 0.0,
    ):
        if core.support != UNIT:
            core = core.refine(UNIT)
            if core.support != UNIT:
                raise ProfileError("tailed profile core must live on [-1, 1]")
        self.core = core
        self.tail_const = complex(tail_const)
        self.tail_slope = complex(tail_slope)
        self.left_const = complex(left_const)

    @classmethod
    def constant(cls, c=1.0) -> "TailedProfile":
        """The constant function ``c`` on the whole line."""
        return cls(Profile.constant(c), c, 0.0, c)

    def plus_constant(self, c) -> "TailedProfile":
        c = complex(c)
        return TailedProfile(
            self.core + Profile.constant(c), self.tail_const + c, self.tail_slope, self.left_const + c
        )

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        scalar = x.ndim == 0
        x = np.atleast_1d(x)
        out = self.core(x)
        right = x > 1.0
        out[right] = self.tail_const + self.tail_slope * (x[right] - 1.0)
        out[x < -1.0] = self.left_const
        return out[0] if scalar else out

    def left_value(self) -> complex:
        return complex(self.core(-1.0))

    def derivative_at(self, x: float) -> complex:
        """One-sided derivative of the core at ``x`` in [-1, 1]."""
        return complex(P.polyval(x, P.polyder(self.core.piece_at(x))))

    def right_value(self) -> complex:
        return self.tail_const

    def continuity_defect(self) -> float:
        end = self.core.piece_at(1.0)
        start = self.core.coeffs[0]
        return max(
            abs(complex(P.polyval(1.0, end)) - self.tail_const),
            abs(complex(P.polyval(-1.0, start)) - self.left_const),
        )

    def __add__(self, other):
        if isinstance(other, TailedProfile):
            return TailedProfile(
                self.core + other.core,
                self.tail_const + other.tail_const,
                self.tail_slope + other.tail_slope,
                self.left_const + other.left_const,
            )
        return NotImplemented

    def __neg__(self):
        return TailedProfile(-self.core, -self.tail_const, -self.tail_slope, -self.left_const)

    def __sub__(self, other):
        if isinstance(other, TailedProfile):
            return self + (-other)
        return NotImplemented

    def __mul__(self, other):
        if isinstance(other, Number):
            c = complex(other)
            return TailedProfile(
                self.core * c, self.tail_const * c, self.tail_slope * c, self.left_const * c
            )
        return NotImplemented

    __rmul__ = __mul__

    def __repr__(self):
        return (
            f"TailedProfile(core={self.core!r}, tail_const={self.tail_const}, "
            f"tail_slope={self.tail_slope}, left_const={self.left_const})"
        )


# -- operations ---------------------------------------------------------------


def moment(p: Profile, order: int) -> complex:
    """``int x**order p(x) dx`` for order 0 or 1, exact."""
    if order not in (0, 1):
        raise ValueError("moment order must be 0 or 1")
    if order == 0:
        return p.integral()
    return _fsum_complex(
        [
            _poly_integral(P.polymulx(row), a, b)
            for row, a, b in zip(p.coeffs, p.breakpoints[:-1], p.breakpoints[1:])
        ]
    )


def _integrate_from_left(p: Profile) -> Profile:
    """x -> int_{grid start}^x p, on the same grid (continuous)."""
    pieces = []
    value = 0j
    for row, a, b in zip(p.coeffs, p.breakpoints[:-1], p.breakpoints[1:]):
        anti = P.polyint(row)
        anti = anti.astype(complex)
        anti[0] += value - P.polyval(a, anti)
        pieces.append(anti)
        value = complex(P.polyval(b, anti))
    return Profile(p.breakpoints, pieces)


def antiderivative(p: Profile, order: int) -> TailedProfile:
    """First (order 1) or second (order 2) antiderivative from minus infinity.

    ``p`` must be supported in [-1, 1].  Order 1 has the constant tail
    ``p0``; order 2 has the tail ``p0 * x - p1``.
    """
    if order not in (1, 2):
        raise ValueError("antiderivative order must be 1 or 2")
    lo, hi = p.support
    if lo < -1.0 or hi > 1.0:
        raise ProfileError("antiderivative needs a profile supported in [-1, 1]")
    p0 = moment(p, 0)
    base = p.refine(UNIT)
    first = _integrate_from_left(base)
    if order == 1:
        return TailedProfile(first, p0, 0.0)
    second = _integrate_from_left(first)
    p1 = moment(p, 1)
    return TailedProfile(second, p0 - p1, p0)


def inner(u, v) -> complex:
    """``int_{-1}^{1} conj(u) v dx``, exact for polynomial integrands."""
    return _product_integral([_as_profile(u), _as_profile(v)], *UNIT)


def weighted_inner(u, w, v) -> complex:
    """``int_{-1}^{1} conj(u) w v dx`` without forming the product profile."""
    return _product_integral([_as_profile(u), _as_profile(w), _as_profile(v)], *UNIT)


def l2norm(u) -> float:
    val = inner(u, u)
    scale = max(abs(val), 1e-300)
    if abs(val.imag) > 1e-12 * scale:
        raise ArithmeticError(f"non-real squared norm {val}")
    return math.sqrt(max(val.real, 0.0))


def l2norm_line(p: Profile) -> float:
    """L2 norm over the full support of ``p`` (not clipped to [-1, 1])."""
    val = _product_integral([p, p])
    return math.sqrt(max(val.real, 0.0))


# -- builtin families -----------------------------------------------------------


def bump_even() -> Profile:
    """Normalized even bump (sqrt(15)/4)(1 - x^2)."""
    c = _SQRT15 / 4.0
    return Profile.poly([c, 0.0, -c])


def bump_odd() -> Profile:
    """Normalized odd bump (sqrt(105)/4) x (1 - x^2)."""
    c = _SQRT105 / 4.0
    return Profile.poly([0.0, c, 0.0, -c])


def parse_number(value) -> complex:
    """Number literal: int/float, "p/q" rational string, or [re, im] pair."""
    from fractions import Fraction

    if isinstance(value, bool):
        raise ProfileError("booleans are not numbers")
    if isinstance(value, (int, float)):
        return complex(value)
    if isinstance(value, str):
        try:
            return complex(float(Fraction(value.strip())))
        except (ValueError, ZeroDivisionError) as exc:
            raise ProfileError(f"cannot parse number {value!r}") from exc
    if isinstance(value, (list, tuple)) and len(value) == 2:
        return complex(parse_number(value[0]).real, parse_number(value[1]).real)
    raise ProfileError(f"cannot parse number {value!r}")


def from_literal(literal) -> Profile:
    """Build a profile from its literal form.

    Either a list of pieces ``{"lo", "hi", "coeffs"}`` (coefficients as
    numbers or ``[re, im]`` pairs) or a builtin family string: ``"const c"``,
    ``"poly [c0, c1, ...]"``, ``"bump_even"``, ``"bump_odd"``.
    """
    if isinstance(literal, str):
        return _from_family(literal)
    if isinstance(literal, dict):
        literal = [literal]
    if not isinstance(literal, (list, tuple)) or not literal:
        raise ProfileError("profile literal must be a non-empty list of pieces or a family name")
    bps = []
    pieces = []
    for i, piece in enumerate(literal):
        if not isinstance(piece, dict):
            raise ProfileError(f"piece[{i}]: expected a table with lo, hi, coeffs")
        for key in ("lo", "hi", "coeffs"):
            if key not in piece:
                raise ProfileError(f"piece[{i}]: missing field '{key}'")
        lo = parse_number(piece["lo"]).real
        hi = parse_number(piece["hi"]).real
        if not isinstance(piece["coeffs"], (list, tuple)) or not piece["coeffs"]:
            raise ProfileError(f"piece[{i}].coeffs: expected a non-empty list")
        try:
            coeffs = [parse_number(c) for c in piece["coeffs"]]
        except ProfileError as exc:
            raise ProfileError(f"piece[{i}].coeffs: {exc}") from None
        if bps and abs(bps[-1] - lo) > 0:
            if lo < bps[-1]:
                raise ProfileError(f"piece[{i}].lo: pieces overlap or are unordered")
            bps.append(lo)
            pieces.append([0.0])
        elif not bps:
            bps.append(lo)
        bps.append(hi)
        pieces.append(coeffs)
    return Profile(bps, pieces)


def _from_family(text: str) -> Profile:
    import json

    name, _, rest = text.strip().partition(" ")
    rest = rest.strip()
    if name == "bump_even":
        return bump_even()
    if name == "bump_odd":
        return bump_odd()
    if name == "const":
        return Profile.constant(parse_number(rest))
    if name == "poly":
        try:
            coeffs = json.loads(rest)
        except json.JSONDecodeError:
            coeffs = [c.strip() for c in rest.strip("[]").split(",")]
        return Profile.poly([parse_number(c) for c in coeffs])
    raise ProfileError(f"unknown profile family {name!r}")
