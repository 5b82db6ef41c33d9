"""Empirical rates of convergence of the eps-family towards its limit.

Two observables are compared with the classified limit: scattering
coefficients at a wavenumber k, and the resolvent applied to a sample
right-hand side.  Errors are fitted on a log-log scale.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cell_solver import OdeOptions, l2_distance, resolvent_apply_eps, scattering_eps
from .classifier import LimitInteraction, classify
from .errors import InsufficientPoints, PointLimitError
from .lines import truncation_length
from .point_ops import resolvent_apply_limit, scattering_limit
from .profiles import Profile, l2norm_line
from .resonance import Tolerances, Triple

SLOPE_THRESHOLD = 0.45
# errors below this floor are rounding noise of an exact match (no rate to fit)
EXACT_FLOOR = 1e-12
DEFAULT_EPS = tuple(2.0**-j for j in range(3, 10))


def geometric_eps(a: float, b: float, n: int) -> list:
    """n points from a down to b, equally spaced in log."""
    if n < 1 or a <= 0 or b <= 0:
        raise ValueError("geometric grid needs positive endpoints and n >= 1")
    if n == 1:
        return [float(a)]
    return [float(v) for v in np.geomspace(a, b, n)]


def fit_rate(points):
    """Least-squares line through (log eps, log error); returns (slope, intercept, rms residual).

    Points with zero error are skipped; at least three positive ones are needed.
    """
    pts = [(float(e), float(r)) for e, r in points if r > 0 and e > 0]
    if len(pts) < 3:
        raise InsufficientPoints(f"need at least 3 points with positive error, got {len(pts)}")
    x = np.log([p[0] for p in pts])
    y = np.log([p[1] for p in pts])
    X = np.column_stack([x, np.ones_like(x)])
    (slope, intercept), *_ = np.linalg.lstsq(X, y, rcond=None)
    res = y - (slope * x + intercept)
    return float(slope), float(intercept), float(math.sqrt(np.mean(res**2)))


@dataclass
class ConvergenceReport:
    eps_list: list
    errors: list
    metric: str
    parameters: dict
    fitted_slope: float | None = None
    fitted_intercept: float | None = None
    fit_residual: float | None = None
    flags: list = field(default_factory=list)
    exact: bool = False
    threshold: float = SLOPE_THRESHOLD

    @property
    def passed(self) -> bool:
        if self.exact:
            return True
        return self.fitted_slope is not None and self.fitted_slope >= self.threshold

    def monotone(self, jitter: float = 0.05) -> bool:
        """Errors nonincreasing as eps decreases, up to a relative jitter."""
        e = [v for v in self.errors if np.isfinite(v)]
        return all(b <= a * (1.0 + jitter) for a, b in zip(e[:-1], e[1:]))

    def to_dict(self) -> dict:
        return {
            "metric": self.metric,
            "parameters": dict(self.parameters),
            "eps": list(self.eps_list),
            "errors": [None if not np.isfinite(v) else v for v in self.errors],
            "flags": list(self.flags),
            "slope": self.fitted_slope,
            "intercept": self.fitted_intercept,
            "residual": self.fit_residual,
            "exact": self.exact,
            "threshold": self.threshold,
            "passed": self.passed,
        }

    def csv_rows(self) -> list:
        return [
            {"eps": e, "error": (v if np.isfinite(v) else ""), "flag": fl}
            for e, v, fl in zip(self.eps_list, self.errors, self.flags)
        ]


def _check_eps(eps_list):
    eps_list = [float(e) for e in eps_list]
    if not eps_list:
        raise ValueError("eps list is empty")
    if any(not 0.0 < e <= 1.0 for e in eps_list):
        raise ValueError("every eps must lie in (0, 1]")
    eps_list = sorted(set(eps_list), reverse=True)
    return eps_list


def _run(fn, eps_list, workers):
    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(fn, eps_list))
    return [fn(e) for e in eps_list]


def _assemble(eps_list, results, metric, parameters) -> ConvergenceReport:
    errors, flags = [], []
    for value in results:
        if isinstance(value, Exception):
            errors.append(float("nan"))
            flags.append(f"{type(value).__name__}: {value}")
        else:
            errors.append(float(value))
            flags.append("ok")
    rep = ConvergenceReport(eps_list=eps_list, errors=errors, metric=metric, parameters=parameters)
    finite = [v for v in errors if np.isfinite(v)]
    if finite and max(finite) <= EXACT_FLOOR:
        rep.exact = True
        rep.flags = ["exact" if f == "ok" else f for f in flags]
        return rep
    rep.flags = flags
    pts = [(e, v) for e, v in zip(eps_list, errors) if np.isfinite(v)]
    try:
        rep.fitted_slope, rep.fitted_intercept, rep.fit_residual = fit_rate(pts)
    except InsufficientPoints as exc:
        rep.flags.append(f"fit skipped: {exc}")
    return rep


def scattering_error(s_eps, s_lim) -> float:
    """|t_eps - t| + |r_eps - r| for both incidences."""
    return abs(s_eps.t - s_lim.t) + abs(s_eps.r_left - s_lim.r_left) + abs(s_eps.r_right - s_lim.r_right)


def scattering_convergence(
    t: Triple,
    k: float,
    eps_list=DEFAULT_EPS,
    limit: LimitInteraction | None = None,
    tol: Tolerances = Tolerances(),
    options: OdeOptions = OdeOptions(),
    workers: int = 1,
) -> ConvergenceReport:
    """Scattering error of the eps-operator against the limit interaction.

    ``limit`` overrides the classified interaction (e.g. to test a candidate
    matrix).  For triples with f = g = 0 the limit is the delta interaction
    of strength a0 = int q.
    """
    eps_list = _check_eps(eps_list)
    limit = _free_or_classified(t, limit, tol)
    s_lim = scattering_limit(limit, k)

    def one(e):
        try:
            return scattering_error(scattering_eps(t, e, k, options), s_lim)
        except PointLimitError as exc:
            return exc

    results = _run(one, eps_list, workers)
    return _assemble(eps_list, results, "scattering_at_k", {"k": k, "case": limit.case.value})


def _free_or_classified(t, limit, tol):
    if limit is not None:
        return limit
    if t.allow_dependent and t.f.max_abs() == 0 and t.g.max_abs() == 0:
        a0 = t.q.integral().real
        return LimitInteraction.connected_from("A3", 0.0, [[1.0, 0.0], [a0, 1.0]])
    return classify(t, tol)


def resolvent_convergence(
    t: Triple,
    zeta: complex,
    h: Profile | None,
    eps_list=DEFAULT_EPS,
    limit: LimitInteraction | None = None,
    tol: Tolerances = Tolerances(),
    options: OdeOptions = OdeOptions(),
    workers: int = 1,
    L: float | None = None,
) -> ConvergenceReport:
    """Relative L2 distance ``||y_eps - y|| / ||h||`` of resolvent solutions on [-L, L]."""
    eps_list = _check_eps(eps_list)
    zeta = complex(zeta)
    params = {"zeta": [zeta.real, zeta.imag]}
    hn = 0.0 if h is None else l2norm_line(h)
    if hn == 0.0:
        rep = ConvergenceReport(eps_list=eps_list, errors=[0.0] * len(eps_list),
                                metric="resolvent_L2_sample", parameters=params,
                                flags=["exact"] * len(eps_list), exact=True)
        return rep
    limit = _free_or_classified(t, limit, tol)
    params["case"] = limit.case.value
    if L is None:
        L = truncation_length(zeta, max(1.0, abs(h.support[0]), abs(h.support[1])))
    y_lim = resolvent_apply_limit(limit, zeta, h, L)

    def one(e):
        try:
            return l2_distance(resolvent_apply_eps(t, e, zeta, h, L, options), y_lim) / hn
        except PointLimitError as exc:
            return exc

    results = _run(one, eps_list, workers)
    return _assemble(eps_list, results, "resolvent_L2_sample", params)
