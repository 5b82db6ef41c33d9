"""Command-line front end: ``pointlimit {classify,scatter,converge,resonance}``.

Configuration comes from an optional TOML file (``--input``) and command-line
flags, flags taking precedence.  Config schema::

    [triple]
    fixture = "a1_fixture"          # builtin, or give f, g and optionally q:
    f = "poly [0, 1]"               # family string or list of pieces
    g = [{lo = -1, hi = 1, coeffs = [1, 0, -3]}]
    q = "const 1"                   # defaults to 0

    [run]
    k = [0.5, 1, 2]
    eps = "0.125:0.001953125:7"     # or a list
    zeta = [0, 1]
    metric = "scattering"           # or "resolvent"
    h = [{lo = 1, hi = 2, coeffs = [1]}]
    tol_rel = 1e-9
    tol_abs = 1e-12
    strict = false

    [limit]                          # optional override of the classified limit
    phase = 0.0
    matrix = [[1, 0], [2, 1]]

Exit codes: 0 ok, 1 input error, 2 unstable classification (strict mode),
3 convergence below the slope threshold.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys

import numpy as np

from . import __version__
from .cell_solver import scattering_eps
from .classifier import LimitInteraction, classify
from .convergence import (
    DEFAULT_EPS,
    SLOPE_THRESHOLD,
    geometric_eps,
    resolvent_convergence,
    scattering_convergence,
)
from .errors import PointLimitError, ProfileError, UnstableClassification
from .fixtures import builtin
from .point_ops import scattering_limit
from .profiles import Profile, from_literal, parse_number
from .resonance import (
    Tolerances,
    Triple,
    compute_invariants,
    half_bound_states,
    lemma_matrix,
    normalize_support,
)

try:  # Python >= 3.11
    import tomllib
except ModuleNotFoundError:  # pragma: no cover
    import tomli as tomllib

SCHEMA_VERSION = "1"
EXIT_OK, EXIT_INPUT, EXIT_UNSTABLE, EXIT_CONVERGENCE = 0, 1, 2, 3


class InputError(Exception):
    """Bad configuration or flags; mapped to exit code 1."""


# -- parsing --------------------------------------------------------------------


def _eps_item(item: str) -> list:
    if ":" not in item:
        try:
            return [parse_number(item).real]
        except ProfileError as exc:
            raise InputError(f"eps {item!r}: {exc}") from None
    parts = item.split(":")
    if len(parts) != 3:
        raise InputError(f"eps grid {item!r} must be 'a:b:n'")
    try:
        a, b, n = parse_number(parts[0]).real, parse_number(parts[1]).real, int(parts[2])
        return geometric_eps(a, b, n)
    except (ProfileError, ValueError) as exc:
        raise InputError(f"eps grid {item!r}: {exc}") from None


def parse_eps(text) -> list:
    """Comma list of numbers and ``"a:b:n"`` geometric grids, or a list of numbers."""
    if isinstance(text, (list, tuple)):
        try:
            vals = [parse_number(v).real for v in text]
        except ProfileError as exc:
            raise InputError(f"eps: {exc}") from None
    else:
        vals = []
        for item in str(text).split(","):
            if item.strip():
                vals.extend(_eps_item(item.strip()))
    if not vals:
        raise InputError("eps list is empty")
    return vals


def parse_zeta(value) -> complex:
    if isinstance(value, (list, tuple)):
        if len(value) != 2:
            raise InputError("zeta must be a [re, im] pair")
        z = complex(parse_number(value[0]).real, parse_number(value[1]).real)
    else:
        parts = str(value).split(",")
        if len(parts) != 2:
            raise InputError(f"zeta {value!r} must be 're,im'")
        z = complex(parse_number(parts[0].strip()).real, parse_number(parts[1].strip()).real)
    if z.imag == 0:
        raise InputError("zeta must have a nonzero imaginary part")
    return z


def parse_k(value) -> list:
    if isinstance(value, (int, float)):
        vals = [float(value)]
    elif isinstance(value, (list, tuple)):
        vals = [parse_number(v).real for v in value]
    else:
        vals = [parse_number(v.strip()).real for v in str(value).split(",") if v.strip()]
    if not vals or any(not v > 0 for v in vals):
        raise InputError("k values must be positive")
    return vals


def _profile(value, field_name) -> Profile:
    try:
        return from_literal(value)
    except ProfileError as exc:
        raise InputError(f"triple.{field_name}: {exc}") from None


def load_config(path) -> dict:
    if path is None:
        return {}
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc}") from None
    except tomllib.TOMLDecodeError as exc:
        raise InputError(f"{path}: {exc}") from None


def build_triple(cfg: dict, fixture: str | None, notes: list):
    """Triple from a builtin name or profile literals; returns (triple, support_scale)."""
    tcfg = dict(cfg.get("triple", {}))
    name = fixture or tcfg.get("fixture")
    if name:
        try:
            return builtin(name), 1.0
        except KeyError as exc:
            raise InputError(str(exc.args[0])) from None
    for key in ("f", "g"):
        if key not in tcfg:
            raise InputError(f"triple.{key}: missing (give triple.fixture or f and g)")
    f = _profile(tcfg["f"], "f")
    g = _profile(tcfg["g"], "g")
    if "q" in tcfg:
        q = _profile(tcfg["q"], "q")
    else:
        q = Profile.zero()
        notes.append("q omitted; using q = 0")
    r = max(abs(v) for p in (f, g, q) for v in p.support)
    scale = 1.0
    try:
        if r > 1.0:
            t, scale = normalize_support((f, g, q), r)
            notes.append(f"supports rescaled to [-1, 1] by factor {scale}; eps is multiplied by it")
        else:
            t = Triple(f, g, q)
    except PointLimitError as exc:
        raise InputError(f"triple: {exc}") from None
    return t, scale


def build_limit(cfg: dict, matrix_flag, phase_flag) -> LimitInteraction | None:
    lcfg = dict(cfg.get("limit", {}))
    if matrix_flag is not None:
        try:
            vals = [float(v) for v in matrix_flag.split(",")]
        except ValueError:
            raise InputError(f"--limit-matrix {matrix_flag!r}: expected 'c11,c12,c21,c22'") from None
        if len(vals) != 4:
            raise InputError("--limit-matrix needs four numbers")
        lcfg["matrix"] = [vals[:2], vals[2:]]
    if phase_flag is not None:
        lcfg["phase"] = phase_flag
    if not lcfg:
        return None
    try:
        if "matrix" in lcfg:
            M = np.array(lcfg["matrix"], dtype=float)
            if M.shape != (2, 2):
                raise InputError("limit.matrix must be 2x2")
            return LimitInteraction.connected_from("A1", float(lcfg.get("phase", 0.0)), M)
        return LimitInteraction.from_dict({"case": "B3", "kind": "separated", **lcfg})
    except (KeyError, ValueError, TypeError) as exc:
        raise InputError(f"limit: {exc}") from None


def tolerances(cfg: dict, args) -> Tolerances:
    run = cfg.get("run", {})
    rel = args.tol_rel if args.tol_rel is not None else run.get("tol_rel", Tolerances().rel)
    ab = args.tol_abs if args.tol_abs is not None else run.get("tol_abs", Tolerances().abs)
    if rel < 0 or ab < 0:
        raise InputError("tolerances must be nonnegative")
    return Tolerances(float(rel), float(ab))


# -- output ---------------------------------------------------------------------


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, complex):
        return [obj.real, obj.imag]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def render(doc, fmt: str, rows=None) -> str:
    if fmt == "csv":
        if rows is None:
            raise InputError("this command has no CSV form")
        buf = io.StringIO()
        if rows:
            w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            w.writerows(rows)
        return buf.getvalue()
    doc = {"schema_version": SCHEMA_VERSION, **_jsonable(doc)}
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


def emit(text: str, path) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- commands -------------------------------------------------------------------


def cmd_classify(args, cfg) -> int:
    notes = []
    t, scale = build_triple(cfg, args.fixture, notes)
    tol = tolerances(cfg, args)
    strict = args.strict or bool(cfg.get("run", {}).get("strict", False))
    li = classify(t, tol, strict=strict)
    doc = li.to_dict()
    doc["support_scale"] = scale
    doc["notes"] = notes
    emit(render(doc, "json" if args.format == "json" else "csv", None), args.output)
    for w in li.warnings:
        print(w, file=sys.stderr)
    return EXIT_OK


def cmd_scatter(args, cfg) -> int:
    notes = []
    run = cfg.get("run", {})
    if run.get("potential") is not None or cfg.get("background") is not None:
        raise InputError("scattering is defined only without a background potential")
    t, scale = build_triple(cfg, args.fixture, notes)
    tol = tolerances(cfg, args)
    ks = parse_k(args.k if args.k is not None else run.get("k", [1.0]))
    eps_list = parse_eps(args.eps if args.eps is not None else run.get("eps", list(DEFAULT_EPS)))
    limit = build_limit(cfg, args.limit_matrix, args.limit_phase)
    rows, failures = [], 0
    for k in ks:
        for e in eps_list:
            row = {"eps": e, "k": k}
            try:
                if e == 0:
                    li = limit or _classified_or_free(t, tol)
                    sd = scattering_limit(li, k)
                else:
                    if not 0 < e * scale <= 1:
                        raise InputError(f"eps {e} leaves (0, 1] after support rescaling")
                    sd = scattering_eps(t, e * scale, k)
                row.update(sd.csv_row(e))
                row["status"] = "ok"
            except (PointLimitError, InputError, ValueError) as exc:
                failures += 1
                row.update({"re_t": "", "im_t": "", "re_r": "", "im_r": "", "unitarity_defect": "",
                            "status": f"error: {exc}"})
            rows.append(row)
    if rows and failures == len(rows):
        for row in rows:
            print(row["status"], file=sys.stderr)
        return EXIT_INPUT
    doc = {"rows": rows, "notes": notes, "support_scale": scale}
    emit(render(doc, args.format, rows), args.output)
    return EXIT_OK


def _classified_or_free(t, tol):
    from .convergence import _free_or_classified

    return _free_or_classified(t, None, tol)


def cmd_converge(args, cfg) -> int:
    notes = []
    run = cfg.get("run", {})
    t, scale = build_triple(cfg, args.fixture, notes)
    tol = tolerances(cfg, args)
    eps_list = parse_eps(args.eps if args.eps is not None else run.get("eps", list(DEFAULT_EPS)))
    eps_solver = [e * scale for e in eps_list]
    limit = build_limit(cfg, args.limit_matrix, args.limit_phase)
    metric = args.metric or run.get("metric", "scattering")
    if metric == "scattering":
        ks = parse_k(args.k if args.k is not None else run.get("k", [1.0]))
        rep = scattering_convergence(t, ks[0], eps_solver, limit, tol, workers=args.workers)
    elif metric == "resolvent":
        zeta_val = args.zeta if args.zeta is not None else run.get("zeta")
        if zeta_val is None:
            raise InputError("the resolvent metric needs zeta (--zeta re,im)")
        zeta = parse_zeta(zeta_val)
        h_lit = run.get("h", [{"lo": 1, "hi": 2, "coeffs": [1]}])
        if args.h is not None:
            lo, _, hi = args.h.partition(":")
            try:
                h_lit = [{"lo": float(lo), "hi": float(hi), "coeffs": [1]}]
            except ValueError:
                raise InputError(f"--h {args.h!r}: expected 'lo:hi'") from None
        try:
            h = from_literal(h_lit)
        except ProfileError as exc:
            raise InputError(f"run.h: {exc}") from None
        if scale != 1.0:
            h = h.scaled_argument(scale)
        rep = resolvent_convergence(t, zeta, h, eps_solver, limit, tol, workers=args.workers)
    else:
        raise InputError(f"unknown metric {metric!r} (scattering or resolvent)")
    rep.eps_list = eps_list
    doc = rep.to_dict()
    doc["notes"] = notes
    doc["support_scale"] = scale
    emit(render(doc, args.format, rep.csv_rows()), args.output)
    return EXIT_OK if rep.passed else EXIT_CONVERGENCE


def cmd_resonance(args, cfg) -> int:
    notes = []
    t, scale = build_triple(cfg, args.fixture, notes)
    tol = tolerances(cfg, args)
    inv = compute_invariants(t, tol)
    rep = half_bound_states(t, tol, inv)
    _, det = lemma_matrix(t, inv)
    grid = np.linspace(-2.0, 2.0, 81)
    doc = {
        "invariants": inv.to_dict(),
        "half_bound_states": {
            "kind": rep.kind.value,
            "count": len(rep.states),
            "residual": rep.residual,
            "residuals": rep.residuals,
            "grid": grid.tolist(),
            "states": [[[complex(v).real, complex(v).imag] for v in u(grid)] for u in rep.states],
        },
        "det_A": det,
        "lambda": inv.lambda_val,
        "det_A_minus_lambda": abs(det - inv.lambda_val),
        "support_scale": scale,
        "notes": notes,
    }
    emit(render(doc, "json", None), args.output)
    return EXIT_OK


COMMANDS = {
    "classify": cmd_classify,
    "scatter": cmd_scatter,
    "converge": cmd_converge,
    "resonance": cmd_resonance,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pointlimit", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("--input", help="TOML configuration file")
        p.add_argument("--output", help="write the result here instead of stdout")
        p.add_argument("--format", choices=("json", "csv"), default="json")
        p.add_argument("--fixture", help="builtin triple, e.g. 'a2_fixture' or 'pseudo_hamiltonian alpha=1'")
        p.add_argument("--tol-rel", type=float, dest="tol_rel")
        p.add_argument("--tol-abs", type=float, dest="tol_abs")
        p.add_argument("--strict", action="store_true")
        p.add_argument("--eps", help="'a:b:n' geometric grid or comma list (0 adds the limit row)")
        p.add_argument("--k", help="wavenumber(s), comma separated")
        p.add_argument("--zeta", help="spectral parameter 're,im'")
        p.add_argument("--metric", choices=("scattering", "resolvent"))
        p.add_argument("--h", help="indicator right-hand side 'lo:hi' (resolvent metric)")
        p.add_argument("--limit-matrix", dest="limit_matrix", help="override limit 'c11,c12,c21,c22'")
        p.add_argument("--limit-phase", dest="limit_phase", type=float, help="phase for --limit-matrix")
        p.add_argument("--workers", type=int, default=1, help="threads for eps sweeps")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        cfg = load_config(args.input)
        return COMMANDS[args.command](args, cfg)
    except UnstableClassification as exc:
        print(f"classification unstable: {exc}", file=sys.stderr)
        return EXIT_UNSTABLE
    except (InputError, ProfileError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except PointLimitError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
