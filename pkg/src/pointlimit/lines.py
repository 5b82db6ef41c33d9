"""Exact solutions of ``-y'' - zeta y = h`` on the two half-lines around an interface.

For piecewise-polynomial ``h`` the solution on every segment between
breakpoints is a polynomial particular solution plus two exponentials
``exp(+-i mu x)`` with ``mu = sqrt(zeta)``, ``Im mu > 0``.  The two unbounded
end segments keep only the decaying exponential, so the solution is exactly
in L2 of the line and satisfies the impedance conditions ``y' = +-i mu y`` at
any truncation point beyond the support of ``h``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import polynomial as P

from .errors import MatchingSingular
from .profiles import Profile

DECAY_DIGITS = 12


def sqrt_upper(zeta: complex) -> complex:
    """Square root of ``zeta`` with positive imaginary part."""
    zeta = complex(zeta)
    if zeta.imag == 0:
        raise ValueError("zeta must have a nonzero imaginary part")
    mu = cmath.sqrt(zeta)
    return mu if mu.imag > 0 else -mu


def particular_poly(coeffs, zeta: complex) -> np.ndarray:
    """Polynomial y with ``-y'' - zeta y = p`` (p given by ascending coefficients).

    y = -p/zeta + p''/zeta^2 - p''''/zeta^3 + ...
    """
    p = np.asarray(coeffs, dtype=complex)
    y = np.zeros_like(p)
    term = p.copy()
    factor = -1.0 / zeta
    while term.size and np.any(term != 0):
        y[: term.size] += factor * term
        term = P.polyder(term, 2) if term.size > 2 else np.zeros(0, dtype=complex)
        factor *= -1.0 / zeta
    return y


def truncation_length(zeta: complex, support_radius: float) -> float:
    """Half-width L beyond which every solution is below 1e-12 of its size at the support."""
    mu = sqrt_upper(zeta)
    return support_radius + DECAY_DIGITS * math.log(10.0) / mu.imag


@dataclass
class _Segment:
    lo: float  # may be -inf
    hi: float  # may be +inf
    poly: np.ndarray
    ia: int | None  # unknown index of exp(i mu (x - lo))
    ib: int | None  # unknown index of exp(-i mu (x - hi))


class LineSolution:
    """Solution on ``(-inf, left_end] U [right_end, inf)``."""

    def __init__(self, mu, segments, coeffs, left_end, right_end):
        self.mu = mu
        self.segments = segments
        self.coeffs = coeffs
        self.left_end = left_end
        self.right_end = right_end

    @property
    def breakpoints(self) -> np.ndarray:
        pts = {s.lo for s in self.segments} | {s.hi for s in self.segments}
        return np.array(sorted(p for p in pts if math.isfinite(p)))

    def _eval_segment(self, s, xs, derivative):
        poly = s.poly
        for _ in range(derivative):
            poly = P.polyder(poly) if poly.size > 1 else np.zeros(1, dtype=complex)
        val = P.polyval(xs, poly).astype(complex)
        mu = self.mu
        if s.ia is not None:
            val = val + self.coeffs[s.ia] * (1j * mu) ** derivative * np.exp(1j * mu * (xs - s.lo))
        if s.ib is not None:
            val = val + self.coeffs[s.ib] * (-1j * mu) ** derivative * np.exp(-1j * mu * (xs - s.hi))
        return val

    def evaluate(self, x, derivative: int = 0, side: str | None = None):
        """Values (or first derivatives) at ``x``; NaN inside the gap.

        At a point shared by both half-lines (zero-width gap) the right
        value is returned unless ``side="left"``.
        """
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = np.full(x.shape, np.nan + 0j)
        for s in self.segments:
            is_left = s.hi <= self.left_end
            if side == "left" and not is_left or side == "right" and is_left:
                continue
            if is_left:
                mask = (x > s.lo) & (x <= s.hi)
            else:
                mask = (x >= s.lo) & (x < s.hi)
            if np.any(mask):
                out[mask] = self._eval_segment(s, x[mask], derivative)
        return out

    def jump_defect(self) -> float:
        """Largest mismatch of y or y' across breakpoints inside each half-line."""
        worst = 0.0
        for a, b in zip(self.segments[:-1], self.segments[1:]):
            if (a.hi <= self.left_end) != (b.hi <= self.left_end):
                continue
            for d in (0, 1):
                ya = self._eval_segment(a, np.array([a.hi]), d)[0]
                yb = self._eval_segment(b, np.array([b.lo]), d)[0]
                worst = max(worst, abs(ya - yb))
        return float(worst)

    def equation_residual(self, zeta, h, L: float, max_len: float) -> float:
        """L2 norm of ``-y'' - zeta y - h`` on [-L, L] outside the gap."""
        pts = set(self.breakpoints.tolist()) | {-L, L}
        if h is not None:
            pts |= {float(b) for b in h.breakpoints}
        pts = np.array(sorted(p for p in pts if -L <= p <= L))
        total = 0.0
        for lo, hi in zip(pts[:-1], pts[1:]):
            if hi <= self.left_end:
                side = "left"
            elif lo >= self.right_end:
                side = "right"
            else:
                continue
            xs, ws = gauss_grid(np.array([lo, hi]), max_len, 16)
            y = self.evaluate(xs, 0, side)
            ypp = self.evaluate(xs, 2, side)
            hv = h(xs) if h is not None else 0.0
            total += float(np.sum(ws * np.abs(-ypp - zeta * y - hv) ** 2))
        return math.sqrt(total)

    def at_left_end(self):
        x = self.left_end
        return complex(self.evaluate(x, 0, "left")[0]), complex(self.evaluate(x, 1, "left")[0])

    def at_right_end(self):
        x = self.right_end
        return complex(self.evaluate(x, 0, "right")[0]), complex(self.evaluate(x, 1, "right")[0])


def _segments_for(points, zeta, h, side):
    """Segments covering one half-line; ``points`` are the finite breakpoints."""
    bounds = ([-math.inf] + list(points)) if side == "left" else (list(points) + [math.inf])
    segs = []
    for lo, hi in zip(bounds[:-1], bounds[1:]):
        if h is None or not (math.isfinite(lo) and math.isfinite(hi)):
            poly = np.zeros(1, dtype=complex)
        else:
            poly = particular_poly(h.piece_at(0.5 * (lo + hi)), zeta)
            m = 0.5 * (lo + hi)
            if m < h.support[0] or m > h.support[1]:
                poly = np.zeros(1, dtype=complex)
        segs.append(_Segment(lo, hi, poly, None, None))
    return segs


def solve_line(zeta, h: Profile | None, left_end: float, right_end: float, interface):
    """Solve ``-y'' - zeta y = h`` off ``(left_end, right_end)`` under interface equations.

    Parameters
    ----------
    interface : callable
        ``interface(mu)`` returns ``(M, rhs)`` with M of shape (2, 4) acting on
        ``(y(left_end), y'(left_end), y(right_end), y'(right_end))``.
    """
    mu = sqrt_upper(zeta)
    if h is not None:
        lo, hi = h.support
        if lo < left_end < hi or lo < right_end < hi:
            h = h.refine([left_end, right_end])
        bps = h.breakpoints
    else:
        bps = np.zeros(0)
    left_pts = sorted({float(b) for b in bps if b < left_end} | {left_end})
    right_pts = sorted({float(b) for b in bps if b > right_end} | {right_end})
    segs = _segments_for(left_pts, zeta, h, "left") + _segments_for(right_pts, zeta, h, "right")

    n = 0
    for s in segs:
        if math.isfinite(s.lo):
            s.ia = n
            n += 1
        if math.isfinite(s.hi):
            s.ib = n
            n += 1

    def row(seg, x, deriv):
        """Coefficient row and constant for y^(deriv)(x) on the segment."""
        r = np.zeros(n, dtype=complex)
        if seg.ia is not None:
            r[seg.ia] = (1j * mu) ** deriv * cmath.exp(1j * mu * (x - seg.lo))
        if seg.ib is not None:
            r[seg.ib] = (-1j * mu) ** deriv * cmath.exp(-1j * mu * (x - seg.hi))
        poly = seg.poly
        for _ in range(deriv):
            poly = P.polyder(poly) if poly.size > 1 else np.zeros(1, dtype=complex)
        return r, complex(P.polyval(x, poly))

    rows, rhs = [], []
    for side in (segs[: len(left_pts)], segs[len(left_pts):]):
        for a, b in zip(side[:-1], side[1:]):
            for d in (0, 1):
                ra, ca = row(a, a.hi, d)
                rb, cb = row(b, b.lo, d)
                rows.append(ra - rb)
                rhs.append(cb - ca)
    left_seg = segs[len(left_pts) - 1]
    right_seg = segs[len(left_pts)]
    ends = [row(left_seg, left_end, 0), row(left_seg, left_end, 1),
            row(right_seg, right_end, 0), row(right_seg, right_end, 1)]
    M, b = interface(mu)
    M = np.asarray(M, dtype=complex)
    for i in range(2):
        r = sum(M[i, j] * ends[j][0] for j in range(4))
        c = sum(M[i, j] * ends[j][1] for j in range(4))
        rows.append(r)
        rhs.append(complex(b[i]) - c)
    S = np.array(rows)
    rhs = np.array(rhs)
    cond = np.linalg.cond(S)
    if not np.isfinite(cond) or cond > 1e13:
        raise MatchingSingular(f"interface system is singular (condition number {cond:.3e})")
    coeffs = np.linalg.solve(S, rhs)
    return LineSolution(mu, segs, coeffs, left_end, right_end)


def gauss_grid(breakpoints, max_len: float, nodes: int = 24):
    """Composite Gauss-Legendre nodes and weights on consecutive breakpoints."""
    xg, wg = np.polynomial.legendre.leggauss(nodes)
    xs, ws = [], []
    for a, b in zip(breakpoints[:-1], breakpoints[1:]):
        m = max(1, int(math.ceil((b - a) / max_len)))
        edges = np.linspace(a, b, m + 1)
        for u, v in zip(edges[:-1], edges[1:]):
            xs.append(0.5 * (v - u) * xg + 0.5 * (u + v))
            ws.append(0.5 * (v - u) * wg)
    return np.concatenate(xs), np.concatenate(ws)
