"""The rescaled cell problem and the eps-operator observables.

In the variable ``t = x / eps`` the operator restricted to ``|x| < eps``
becomes the cell equation

    -z'' + (g, z) f + (f, z) g + eps q z = eps^2 (E z + h(eps t)),   t in [-1, 1].

It is solved by rank-two reduction: two homogeneous solutions of
``-z'' + eps q z = eps^2 E z``, particular solutions forced by ``f``, ``g``
and ``h`` (zero initial data), each carrying running integrals of
``conj(g) z`` and ``conj(f) z`` as extra ODE states, and a 2x2
self-consistency system for ``A = (g, z)``, ``B = (f, z)``.

Outside the cell the operator is free (V = 0), so transfer matrices,
scattering data and resolvents follow from plane waves and the exact
half-line solutions of :mod:`pointlimit.lines`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp

from .errors import (
    MatchingSingular,
    OdeToleranceNotMet,
    SelfConsistencySingular,
    TruncationTooSmall,
)
from .lines import LineSolution, gauss_grid, solve_line, sqrt_upper, truncation_length
from .profiles import Profile, _product_integral
from .resonance import Triple

RTOL = 1e-12
ATOL = 1e-14
CHECK_RTOL = 1e-13
CHECK_ATOL = 1e-15
ODE_TARGET = 1e-10
COND_MAX = 1e12


@dataclass(frozen=True)
class OdeOptions:
    rtol: float = RTOL
    atol: float = ATOL
    check: bool = True
    target: float = ODE_TARGET


def _horner(coeffs, t):
    acc = 0j
    for c in reversed(coeffs):
        acc = acc * t + c
    return acc


class CellBasis:
    """Fundamental solutions of the cell equation for one (eps, E, h).

    Columns: homogeneous solutions with data (1, 0) and (0, 1) at t = -1,
    particular solutions forced by f, g and -eps^2 h(eps t).  Rows: z, z',
    int conj(g) z, int conj(f) z (running integrals from -1).
    """

    def __init__(self, t: Triple, eps: float, E: complex, h: Profile | None = None,
                 options: OdeOptions = OdeOptions()):
        if not 0.0 <= eps <= 1.0:
            raise ValueError("eps must lie in [0, 1]")
        self.triple = t
        self.eps = float(eps)
        self.E = complex(E)
        self.options = options
        hs = None
        if h is not None and eps > 0:
            hs = h.scaled_argument(eps)
            if hs.support[1] <= -1.0 or hs.support[0] >= 1.0:
                hs = None
        self.h_cell = hs
        grid = {-1.0, 1.0}
        for p in (t.f, t.g, t.q) + ((hs,) if hs is not None else ()):
            grid.update(float(b) for b in p.breakpoints if -1.0 < b < 1.0)
        self.grid = np.array(sorted(grid))
        self._segments, end = self._integrate(options.rtol, options.atol)
        self.end = end
        self.ode_error_estimate = 0.0
        if options.check:
            _, end_check = self._integrate(CHECK_RTOL, CHECK_ATOL, dense=False)
            self.ode_error_estimate = float(np.max(np.abs(end_check - end)))
            scale = 1.0 + float(np.max(np.abs(end)))
            if self.ode_error_estimate > options.target * scale:
                raise OdeToleranceNotMet(
                    f"ODE error estimate {self.ode_error_estimate:.3e} exceeds "
                    f"{options.target:.1e} x scale {scale:.3e}"
                )
        Ig, If = end[2], end[3]
        self.K = np.array([[Ig[2], Ig[3]], [If[2], If[3]]])
        self.system = np.eye(2) - self.K
        self.condition_number = float(np.linalg.cond(self.system))

    def _piece_tables(self, a, b):
        m = 0.5 * (a + b)
        t = self.triple
        eps, E = self.eps, self.E
        f = t.f.piece_at(m) if t.f.support[0] <= m <= t.f.support[1] else np.zeros(1)
        g = t.g.piece_at(m) if t.g.support[0] <= m <= t.g.support[1] else np.zeros(1)
        q = t.q.piece_at(m) if t.q.support[0] <= m <= t.q.support[1] else np.zeros(1)
        pot = eps * np.asarray(q, dtype=complex)
        pot = pot.copy()
        pot[0] -= eps * eps * E
        hs = self.h_cell
        if hs is not None and hs.support[0] <= m <= hs.support[1]:
            hc = -eps * eps * np.asarray(hs.piece_at(m), dtype=complex)
        else:
            hc = np.zeros(1, dtype=complex)
        to_list = lambda c: [complex(v) for v in c]  # noqa: E731
        return (to_list(pot), to_list(f), to_list(g), to_list(np.conj(f)),
                to_list(np.conj(g)), to_list(hc))

    def _integrate(self, rtol, atol, dense=True):
        y = np.zeros((4, 5), dtype=complex)
        y[0, 0] = 1.0
        y[1, 1] = 1.0
        segments = []
        for a, b in zip(self.grid[:-1], self.grid[1:]):
            pot, f, g, fc, gc, hc = self._piece_tables(a, b)

            def rhs(s, Y, pot=pot, f=f, g=g, fc=fc, gc=gc, hc=hc):
                Y = Y.reshape(4, 5)
                z = Y[0]
                out = np.empty((4, 5), dtype=complex)
                out[0] = Y[1]
                acc = _horner(pot, s) * z
                acc[2] += _horner(f, s)
                acc[3] += _horner(g, s)
                acc[4] += _horner(hc, s)
                out[1] = acc
                out[2] = _horner(gc, s) * z
                out[3] = _horner(fc, s) * z
                return out.ravel()

            sol = solve_ivp(rhs, (a, b), y.ravel(), method="DOP853", rtol=rtol, atol=atol,
                            dense_output=dense)
            if not sol.success:
                raise OdeToleranceNotMet(f"integrator failed on [{a}, {b}]: {sol.message}")
            y = sol.y[:, -1].reshape(4, 5)
            if dense:
                segments.append((a, b, sol.sol))
        return segments, y

    # -- states -----------------------------------------------------------
    def states(self, s):
        """All fundamental states at points ``s``; shape (len(s), 4, 5)."""
        s = np.atleast_1d(np.asarray(s, dtype=float))
        out = np.empty((s.size, 4, 5), dtype=complex)
        his = np.array([seg[1] for seg in self._segments])
        idx = np.clip(np.searchsorted(his, s, side="left"), 0, len(self._segments) - 1)
        for i, (_, _, sol) in enumerate(self._segments):
            mask = idx == i
            if np.any(mask):
                out[mask] = sol(s[mask]).T.reshape(-1, 4, 5)
        return out

    def self_consistent(self, c1, c2, forcing: bool = True):
        """(A, B) for initial data (c1, c2); returns (A, B, nonunique)."""
        Ig, If = self.end[2], self.end[3]
        hw = 1.0 if forcing else 0.0
        rhs = np.array([c1 * Ig[0] + c2 * Ig[1] + hw * Ig[4], c1 * If[0] + c2 * If[1] + hw * If[4]])
        if self.condition_number <= COND_MAX:
            AB = np.linalg.solve(self.system, rhs)
            return complex(AB[0]), complex(AB[1]), False
        if self.eps > 0:
            raise SelfConsistencySingular(
                f"self-consistency system singular at eps^2 E = {self.eps**2 * self.E}: "
                f"condition number {self.condition_number:.3e}; perturb E",
                self.condition_number,
            )
        AB, *_ = np.linalg.lstsq(self.system, rhs, rcond=1e-12)
        defect = np.linalg.norm(self.system @ AB - rhs)
        if defect > 1e-9 * (1.0 + np.linalg.norm(rhs)):
            raise SelfConsistencySingular(
                f"no solution with these initial data (consistency defect {defect:.3e})",
                self.condition_number,
            )
        return complex(AB[0]), complex(AB[1]), True

    def weights(self, c1, c2, forcing: bool = True):
        A, B, nonunique = self.self_consistent(c1, c2, forcing)
        return np.array([c1, c2, A, B, 1.0 if forcing else 0.0], dtype=complex), A, B, nonunique

    def monodromy(self) -> np.ndarray:
        """Map (z(-1), z'(-1)) -> (z(1), z'(1)) of the unforced cell equation."""
        M = np.empty((2, 2), dtype=complex)
        for j, c in enumerate(((1.0, 0.0), (0.0, 1.0))):
            w, *_ = self.weights(*c, forcing=False)
            M[:, j] = self.end[:2] @ w
        return M

    def forced_end(self) -> np.ndarray:
        """(z(1), z'(1)) of the forced solution with zero data at -1."""
        w, *_ = self.weights(0.0, 0.0, forcing=True)
        return self.end[:2] @ w


@dataclass
class CellSolution:
    """Solution of the cell equation with prescribed data at t = -1."""

    basis: CellBasis
    w: np.ndarray
    A: complex
    B: complex
    boundary: tuple
    ode_error_estimate: float
    nonunique: bool = False

    def z(self, s):
        return self.basis.states(s)[:, 0, :] @ self.w

    def dz(self, s):
        return self.basis.states(s)[:, 1, :] @ self.w

    def consistency_residual(self, nodes: int = 40) -> float:
        """|A - (g, z)| + |B - (f, z)| with (g, z), (f, z) re-evaluated by Gauss quadrature."""
        t = self.basis.triple
        xs, ws = gauss_grid(self.basis.grid, 0.25, nodes)
        z = self.z(xs)
        gz = np.sum(ws * np.conj(t.g(xs)) * z)
        fz = np.sum(ws * np.conj(t.f(xs)) * z)
        return abs(self.A - gz) + abs(self.B - fz)


def solve_cell(t: Triple, eps: float, E: complex, init=(1.0, 0.0), h: Profile | None = None,
               options: OdeOptions = OdeOptions()) -> CellSolution:
    """Solve the cell equation with ``(z(-1), z'(-1)) = init``.

    ``h`` is an optional right-hand side in the original variable x; it enters
    the cell equation as ``eps^2 h(eps t)``.  At ``eps = 0`` a singular
    self-consistency system is resolved by the minimum-norm choice of
    (A, B) and flagged as ``nonunique``.
    """
    basis = CellBasis(t, eps, E, h, options)
    w, A, B, nonunique = basis.weights(init[0], init[1], forcing=h is not None)
    end = basis.end[:2] @ w
    return CellSolution(
        basis=basis,
        w=w,
        A=A,
        B=B,
        boundary=(complex(init[0]), complex(init[1]), complex(end[0]), complex(end[1])),
        ode_error_estimate=basis.ode_error_estimate,
        nonunique=nonunique,
    )


@dataclass
class TransferMatrix:
    m: np.ndarray
    ref_left: float
    ref_right: float
    k_or_E: complex

    @property
    def det(self) -> complex:
        return complex(np.linalg.det(self.m))


@dataclass
class ScatteringData:
    k: float
    t: complex
    r_left: complex
    r_right: complex
    reference: str = "origin"
    t_right: complex | None = None

    @property
    def unitarity_defect(self) -> float:
        return abs(abs(self.t) ** 2 + abs(self.r_left) ** 2 - 1.0)

    @property
    def unitarity_defect_right(self) -> float:
        tr = self.t if self.t_right is None else self.t_right
        return abs(abs(tr) ** 2 + abs(self.r_right) ** 2 - 1.0)

    def csv_row(self, eps: float) -> dict:
        return {
            "eps": eps,
            "k": self.k,
            "re_t": self.t.real,
            "im_t": self.t.imag,
            "re_r": self.r_left.real,
            "im_r": self.r_left.imag,
            "unitarity_defect": max(self.unitarity_defect, self.unitarity_defect_right),
        }


def transfer_matrix_eps(t: Triple, eps: float, k: float, options: OdeOptions = OdeOptions()) -> TransferMatrix:
    """Map (y(-eps), y'(-eps)) -> (y(eps), y'(eps)) at energy k^2."""
    if not 0.0 < eps <= 1.0:
        raise ValueError("eps must lie in (0, 1]")
    if not k > 0:
        raise ValueError("k must be positive")
    M = CellBasis(t, eps, k * k, None, options).monodromy()
    m = np.diag([1.0, 1.0 / eps]) @ M @ np.diag([1.0, eps])
    return TransferMatrix(m=m, ref_left=-eps, ref_right=eps, k_or_E=k)


def scattering_from_transfer(m: np.ndarray, k: float, xl: float, xr: float) -> ScatteringData:
    """Scattering coefficients of plane waves e^{+-ikx} matched by ``m`` from xl to xr.

    The amplitudes refer to global plane waves, i.e. to the origin.
    """
    ik = 1j * k
    em = lambda x: np.array([np.exp(-ik * x), -ik * np.exp(-ik * x)])  # noqa: E731
    ep = lambda x: np.array([np.exp(ik * x), ik * np.exp(ik * x)])  # noqa: E731
    # left incidence: m (ep + r em)(xl) = t ep(xr)
    S = np.column_stack([m @ em(xl), -ep(xr)])
    cond = np.linalg.cond(S)
    if not np.isfinite(cond) or cond > 1e13:
        raise MatchingSingular(f"scattering matching system singular at k = {k}")
    r, tt = np.linalg.solve(S, -(m @ ep(xl)))
    # right incidence: m (t_R em)(xl) = em(xr) + r_R ep(xr)
    S2 = np.column_stack([m @ em(xl), -ep(xr)])
    tR, rR = np.linalg.solve(S2, em(xr))
    return ScatteringData(k=k, t=complex(tt), r_left=complex(r), r_right=complex(rR),
                          reference="origin", t_right=complex(tR))


def scattering_eps(t: Triple, eps: float, k: float, options: OdeOptions = OdeOptions()) -> ScatteringData:
    """Transmission and reflection of the eps-operator, referenced to the origin."""
    tm = transfer_matrix_eps(t, eps, k, options)
    return scattering_from_transfer(tm.m, k, -eps, eps)


def scattering_solution_eps(t: Triple, eps: float, k: float, options: OdeOptions = OdeOptions()):
    """Left-incidence scattering data and the cell solution ``z(t) = y(eps t)``."""
    basis = CellBasis(t, eps, k * k, None, options)
    M = basis.monodromy()
    m = np.diag([1.0, 1.0 / eps]) @ M @ np.diag([1.0, eps])
    sd = scattering_from_transfer(m, k, -eps, eps)
    ik = 1j * k
    y = np.exp(-ik * eps) + sd.r_left * np.exp(ik * eps)
    dy = ik * (np.exp(-ik * eps) - sd.r_left * np.exp(ik * eps))
    w, A, B, nonunique = basis.weights(y, eps * dy, forcing=False)
    end = basis.end[:2] @ w
    cell = CellSolution(basis, w, A, B, (y, eps * dy, complex(end[0]), complex(end[1])),
                        basis.ode_error_estimate, nonunique)
    return sd, cell


# -- resolvent ------------------------------------------------------------------


class Trajectory:
    """A resolvent solution on [-L, L]: exact outside the gap, ``inner`` inside."""

    def __init__(self, line: LineSolution, L: float, inner=None, gap_breakpoints=()):
        self.line = line
        self.L = L
        self.inner = inner
        self.gap_breakpoints = tuple(gap_breakpoints)

    @property
    def breakpoints(self) -> np.ndarray:
        pts = set(self.line.breakpoints.tolist()) | set(self.gap_breakpoints)
        pts |= {-self.L, self.L}
        return np.array(sorted(p for p in pts if -self.L <= p <= self.L))

    def __call__(self, x):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        out = self.line.evaluate(x)
        gap = (x > self.line.left_end) & (x < self.line.right_end)
        if np.any(gap) and self.inner is not None:
            out[gap] = self.inner(x[gap])
        return out

    def l2_norm(self) -> float:
        xs, ws = gauss_grid(self.breakpoints, self.max_piece())
        return math.sqrt(float(np.sum(ws * np.abs(self(xs)) ** 2)))

    def max_piece(self) -> float:
        return min(0.5, 0.5 / abs(self.line.mu))


def l2_distance(a: Trajectory, b: Trajectory) -> float:
    """L2 distance of two trajectories on the common interval [-L, L]."""
    L = min(a.L, b.L)
    pts = np.union1d(a.breakpoints, b.breakpoints)
    pts = pts[(pts >= -L) & (pts <= L)]
    pts = np.union1d(pts, [-L, L])
    fine = []
    for traj in (a, b):
        if traj.inner is not None and len(traj.gap_breakpoints) > 1:
            gp = np.asarray(traj.gap_breakpoints)
            fine.append(np.diff(gp).min() / 2.0)
    max_len = min([a.max_piece(), b.max_piece()] + fine)
    # long free segments only need the coarse spacing
    xs_list, ws_list = [], []
    for lo, hi in zip(pts[:-1], pts[1:]):
        inside_gap = any(
            tr.inner is not None and tr.line.left_end <= lo and hi <= tr.line.right_end for tr in (a, b)
        )
        x, w = gauss_grid(np.array([lo, hi]), max_len if inside_gap else max(a.max_piece(), b.max_piece()))
        xs_list.append(x)
        ws_list.append(w)
    xs, ws = np.concatenate(xs_list), np.concatenate(ws_list)
    return math.sqrt(float(np.sum(ws * np.abs(a(xs) - b(xs)) ** 2)))


def _check_resolvent_args(zeta, h, L):
    zeta = complex(zeta)
    if zeta.imag == 0:
        raise ValueError("zeta must have a nonzero imaginary part")
    radius = 1.0 if h is None else max(1.0, abs(h.support[0]), abs(h.support[1]))
    need = truncation_length(zeta, radius)
    if L is None:
        L = need
    elif L < need:
        raise TruncationTooSmall(f"L = {L} is below the decay length requirement {need:.3f}")
    return zeta, L


def resolvent_apply_eps(t: Triple, eps: float, zeta: complex, h: Profile | None, L: float | None = None,
                        options: OdeOptions = OdeOptions()) -> Trajectory:
    """``(H_eps - zeta)^{-1} h`` on [-L, L] (V = 0)."""
    zeta, L = _check_resolvent_args(zeta, h, L)
    if not 0.0 < eps <= 1.0:
        raise ValueError("eps must lie in (0, 1]")
    basis = CellBasis(t, eps, zeta, h, options)
    M = basis.monodromy()
    m = np.diag([1.0, 1.0 / eps]) @ M @ np.diag([1.0, eps])
    zf = basis.forced_end()
    # (y, y')(eps) = m (y, y')(-eps) + (zf0, zf1 / eps)
    jump = np.array([zf[0], zf[1] / eps])

    def interface(mu):
        Mi = np.hstack([-m, np.eye(2)])
        return Mi, jump

    line = solve_line(zeta, h, -eps, eps, interface)
    yl, dyl = line.at_left_end()
    w, *_ = basis.weights(yl, eps * dyl, forcing=True)

    def inner(x):
        return basis.states(np.asarray(x) / eps)[:, 0, :] @ w

    gap = tuple(eps * basis.grid)
    traj = Trajectory(line, L, inner, gap)
    traj.cell_weights = w
    traj.basis = basis
    return traj


def resolvent_residual(traj: Trajectory, t: Triple, eps: float, zeta: complex, h: Profile | None) -> float:
    """L2 residual of the equation: exact derivatives outside, self-consistency inside.

    Outside the cell ``-y'' - zeta y - h`` is evaluated from the closed form
    and the matching across breakpoints of h is checked; inside, the
    rank-two coefficients are compared with quadratures of the dense
    solution.
    """
    line = traj.line
    outer = line.equation_residual(zeta, h, traj.L, traj.max_piece())
    total = outer**2 + line.jump_defect() ** 2
    basis = traj.basis
    w = traj.cell_weights
    cell = CellSolution(basis, w, w[2], w[3], (), basis.ode_error_estimate)
    # a defect d in (A, B) perturbs the cell equation by d1 f + d2 g, scaled back to x
    cres = cell.consistency_residual()
    fnorm = math.sqrt(abs(_product_integral([t.f, t.f]))) + math.sqrt(abs(_product_integral([t.g, t.g])))
    total += (cres * fnorm) ** 2 / eps**3
    return math.sqrt(total)


__all__ = [
    "OdeOptions",
    "CellBasis",
    "CellSolution",
    "TransferMatrix",
    "ScatteringData",
    "Trajectory",
    "solve_cell",
    "transfer_matrix_eps",
    "scattering_eps",
    "scattering_solution_eps",
    "scattering_from_transfer",
    "resolvent_apply_eps",
    "resolvent_residual",
    "l2_distance",
]
