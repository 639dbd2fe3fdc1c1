"""Command-line front end: ``canonsys <command> [options]``.

Exit status: 0 on success, 1 on a domain error (invalid Hamiltonian,
eigenvalue hit, ...), 2 on a usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import re
import sys

import numpy as np

from . import hamiltonian as ham
from . import relations as rel
from .config import DEFAULTS
from .errors import CanonicalSystemError
from .extension import SelfAdjointBVP, eigenvalues_in
from .hamiltonian import QuadratureRule
from .resolvent import GreenKernel, apply_resolvent, hs_eigen_compare, resolvent_residual
from .weyl import classify, m_function

SCHEMA_VERSION = 1

_ANGLE = re.compile(r"^\s*([+-]?\d*\.?\d*)\s*\*?\s*pi\s*(?:/\s*(\d+(?:\.\d*)?))?\s*$")


def parse_complex(text: str) -> complex:
    """Parse ``a+bi``, ``a-bi``, ``bi``, ``i`` or a plain real number."""
    s = text.strip().replace(" ", "").replace("j", "i")
    if not s:
        raise argparse.ArgumentTypeError("empty complex number")
    if s.endswith("i"):
        head = s[:-1]
        if head == "" or head[-1] in "+-":
            s = head + "1i"
    try:
        return complex(s.replace("i", "j"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"cannot parse complex number {text!r} (use a+bi)") from None


def parse_angle(text: str) -> float:
    """Angles in (0, pi]: a number, or forms like ``pi``, ``pi/2``, ``3pi/4``."""
    m = _ANGLE.match(text)
    if m:
        coef = m.group(1)
        value = float(coef) if coef not in ("", "+", "-") else (-1.0 if coef == "-" else 1.0)
        value *= math.pi
        if m.group(2):
            value /= float(m.group(2))
    else:
        try:
            value = float(text)
        except ValueError:
            raise argparse.ArgumentTypeError(f"cannot parse angle {text!r}") from None
    if not 0.0 < value <= math.pi:
        raise argparse.ArgumentTypeError(f"angle {text!r} must lie in (0, pi]")
    return value


def _jsonable(obj):
    if isinstance(obj, complex):
        return {"re": obj.real, "im": obj.imag}
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    return obj


# -- field selection -------------------------------------------------------------


def _add_field_args(p: argparse.ArgumentParser) -> None:
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--file", help="Hamiltonian JSON file")
    src.add_argument("--builtin", choices=ham.BUILTIN_NAMES, help="named example Hamiltonian")
    p.add_argument("--length", type=float, help="builtin: total length")
    p.add_argument("--count", type=int, help="builtin: number of cells")
    p.add_argument("--rate", type=float, help="builtin exp-decay: decay rate")
    p.add_argument("--seed", type=int, help="builtin random-psd: seed")
    p.add_argument("--normalize", action="store_true", help="trace-normalize the field first")


def _field(args, check: bool = True) -> ham.HamiltonianField:
    if args.file:
        field = ham.load(args.file, check=check)
    else:
        params = {k: getattr(args, k) for k in ("length", "count", "rate", "seed") if getattr(args, k) is not None}
        field = ham.builtin(args.builtin, params)
    if getattr(args, "normalize", False):
        field = ham.trace_normalize(field)
    return field


def _quad(args) -> QuadratureRule:
    return QuadratureRule(args.quad_order, args.max_panel)


def _add_quad_args(
    p: argparse.ArgumentParser, order: int = DEFAULTS["quad_order"], max_panel: float = DEFAULTS["quad_max_panel"]
) -> None:
    p.add_argument("--quad-order", type=int, default=order, help="Gauss-Legendre points per panel")
    p.add_argument("--max-panel", type=float, default=max_panel, help="longest quadrature panel")


def _field_dict(field: ham.HamiltonianField) -> dict:
    return {"cells": [{"length": c.length, "h": [c.h11, c.h12, c.h22]} for c in field.cells]}


# -- commands: each returns (result dict, table rows or None) ---------------------


def cmd_validate(args):
    field = _field(args, check=False)
    res = ham.validate(field, args.tol_psd)
    out = {"ok": res.ok, "cell": res.cell, "deficit": res.deficit, "diagnostics": res.diagnostics}
    return out, None, (0 if res.ok else 1)


def cmd_normalize(args):
    args.normalize = False
    field = ham.trace_normalize(_field(args))
    if args.out:
        ham.save(field, args.out)
    out = {"total_length": field.total_length, "cells": len(field), **_field_dict(field)}
    return out, None, 0


def cmd_builtin(args):
    field = _field(args)
    if args.out:
        ham.save(field, args.out)
    return {"total_length": field.total_length, **_field_dict(field)}, None, 0


def cmd_mfunc(args):
    field = _field(args)
    N = field.total_length if args.N is None else args.N
    m = m_function(field, args.z, args.beta, N)
    return {"z": args.z, "beta": args.beta, "N": N, "m": m}, None, 0


def cmd_classify(args):
    field = _field(args)
    schedule = args.schedule or list(DEFAULTS["classify_schedule"])
    rep = classify(field, args.z, schedule, args.rel_tol, _quad(args))
    rows = [
        {"N": n, "norm_u": a, "norm_v": b, "min_form": c, "max_form": d}
        for n, a, b, c, d in zip(rep.schedule, rep.norms_u, rep.norms_v, rep.min_form, rep.max_form)
    ]
    return rep.as_dict(), rows, 0


def _bvp(args) -> SelfAdjointBVP:
    return SelfAdjointBVP(_field(args), args.N, args.alpha, args.beta)


def cmd_eigs(args):
    bvp = _bvp(args)
    eig = eigenvalues_in(bvp, tuple(args.window), args.grid_points, args.tol)
    rows = [{"index": i, "eigenvalue": v, "residual": r} for i, (v, r) in enumerate(zip(eig.values, eig.residuals))]
    out = {"N": bvp.N, "alpha": float(bvp.alpha), "beta": float(bvp.beta), "window": list(args.window),
           "eigenvalues": list(eig.values), "residuals": list(eig.residuals)}
    return out, rows, 0


def cmd_resolvent_check(args):
    bvp = _bvp(args)
    hvec = np.array([args.h[0], args.h[1]], dtype=complex)

    def h(x):
        return np.broadcast_to(hvec, np.shape(x) + (2,))

    quad = _quad(args)
    kernel = GreenKernel(bvp, args.z, swapped=args.swap)
    y = apply_resolvent(kernel, h, quad)
    res = resolvent_residual(kernel, h, y)
    xs = np.linspace(0.0, bvp.N, args.samples)
    ys = y(xs)
    rows = [{"x": float(x), "y1": complex(v[0]), "y2": complex(v[1])} for x, v in zip(xs, ys)]
    out = {"z": complex(args.z), "swapped": args.swap, "residual": res, "m": kernel.m,
           "samples": [{"x": r["x"], "y": [r["y1"], r["y2"]]} for r in rows]}
    return out, rows, 0


def cmd_hs_compare(args):
    bvp = _bvp(args)
    cmp_ = hs_eigen_compare(bvp, args.z, args.k, _quad(args))
    rows = [{"mu": m, "eigenvalue": e, "gap": g} for m, e, g in cmp_.pairs]
    out = {"z": args.z, "k": args.k, "pairs": rows, "hs_count": cmp_.hs_count,
           "shooting_count": cmp_.shooting_count, "counts_match": cmp_.counts_match, "max_gap": cmp_.max_gap}
    return out, rows, (0 if cmp_.counts_match else 1)


def cmd_relation_demo(args):
    e = np.eye(2)
    s = rel.LinearRelation.from_pairs([e[0]], [e[1]])
    mv = rel.LinearRelation.multivalued(1)
    ext = rel.extension_dimension_check(s, args.trials, args.seed)
    t = rel.random_selfadjoint(args.n, args.seed)
    rep = rel.report(t)
    out = {
        "span_e1_e2": {
            "symmetric": rel.is_symmetric(s),
            "selfadjoint": rel.is_selfadjoint(s),
            "defect": [rel.defect_index(s, 1j), rel.defect_index(s, -1j)],
            "selfadjoint_extension_dims": sorted(set(ext.selfadjoint_dims)),
            "dimension_rule_holds": ext.dimension_rule_holds,
        },
        "multivalued": {"selfadjoint": rel.is_selfadjoint(mv), "spectrum": rel.spectrum_selfadjoint(mv),
                        "spectral_kernel": rel.spectral_kernel(mv)},
        "random_selfadjoint": {"n": args.n, "seed": args.seed, "dim": t.dim, "spectrum": rep.spectrum,
                               "spectral_kernel": rep.spectral_kernel},
    }
    return out, None, 0


# -- output ---------------------------------------------------------------------------


def _fmt(v) -> str:
    if isinstance(v, complex):
        return f"{v.real:.17g}{v.imag:+.17g}i"
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


def _flatten(d, prefix=""):
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            yield from _flatten(v, key + ".")
        else:
            yield key, v


def _emit(command: str, result: dict, rows, fmt: str, stream) -> None:
    if fmt == "json":
        doc = {"schema_version": SCHEMA_VERSION, "command": command, "result": _jsonable(result)}
        stream.write(json.dumps(doc, indent=2, sort_keys=True, allow_nan=False) + "\n")
    elif fmt == "csv":
        buf = io.StringIO()
        if rows:
            w = csv.DictWriter(buf, fieldnames=list(rows[0]), lineterminator="\n")
            w.writeheader()
            for r in rows:
                w.writerow({k: _fmt(v) for k, v in r.items()})
        else:
            w = csv.writer(buf, lineterminator="\n")
            w.writerow(["key", "value"])
            for k, v in _flatten(result):
                w.writerow([k, _fmt(v) if not isinstance(v, (list, tuple)) else " ".join(_fmt(x) for x in v)])
        stream.write(buf.getvalue())
    else:
        if rows:
            keys = list(rows[0])
            stream.write("  ".join(f"{k:>24}" for k in keys) + "\n")
            for r in rows:
                stream.write("  ".join(f"{_fmt(r[k]):>24}" for k in keys) + "\n")
        for k, v in _flatten(result):
            if rows and isinstance(v, list):
                continue
            if isinstance(v, list):
                v = ", ".join(_fmt(x) for x in v)
            stream.write(f"{k}: {_fmt(v)}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="canonsys", description=__doc__.splitlines()[0])
    parser.add_argument("--show-defaults", action="store_true", help="print the default tolerances and exit")
    parser.add_argument("--output", choices=("table", "json", "csv"), default="table")
    sub = parser.add_subparsers(dest="command", metavar="command")

    def common(p):
        p.add_argument("--output", choices=("table", "json", "csv"), default=argparse.SUPPRESS)

    p = sub.add_parser("validate", help="check a Hamiltonian")
    _add_field_args(p)
    p.add_argument("--tol-psd", type=float, default=DEFAULTS["tol_psd"])
    common(p)
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("normalize", help="trace-normalize a Hamiltonian")
    _add_field_args(p)
    p.add_argument("--out", help="write the normalized field to this JSON file")
    common(p)
    p.set_defaults(func=cmd_normalize)

    p = sub.add_parser("builtin", help="emit a builtin Hamiltonian")
    _add_field_args(p)
    p.add_argument("--out", help="write the field to this JSON file")
    common(p)
    p.set_defaults(func=cmd_builtin)

    p = sub.add_parser("mfunc", help="m-function on [0, N]")
    _add_field_args(p)
    p.add_argument("--z", type=parse_complex, required=True)
    p.add_argument("--beta", type=parse_angle, default=math.pi)
    p.add_argument("--N", type=float)
    common(p)
    p.set_defaults(func=cmd_mfunc)

    p = sub.add_parser("classify", help="limit-point / limit-circle classification")
    _add_field_args(p)
    p.add_argument("--z", type=parse_complex, default=1j)
    p.add_argument("--schedule", type=float, nargs="+")
    p.add_argument("--rel-tol", type=float, default=DEFAULTS["classify_rel_tol"])
    _add_quad_args(p)
    common(p)
    p.set_defaults(func=cmd_classify)

    def bvp_args(p):
        _add_field_args(p)
        p.add_argument("--alpha", type=parse_angle, default=math.pi)
        p.add_argument("--beta", type=parse_angle, default=math.pi)
        p.add_argument("--N", type=float)

    p = sub.add_parser("eigs", help="eigenvalues of the boundary-value problem in a window")
    bvp_args(p)
    p.add_argument("--window", type=float, nargs=2, required=True, metavar=("LO", "HI"))
    p.add_argument("--grid-points", type=int, default=DEFAULTS["grid_points"])
    p.add_argument("--tol", type=float, default=DEFAULTS["root_tol"])
    common(p)
    p.set_defaults(func=cmd_eigs)

    p = sub.add_parser("resolvent-check", help="Green integral of a constant h and its residual")
    bvp_args(p)
    p.add_argument("--z", type=parse_complex, default=0.3)
    p.add_argument("--h", type=parse_complex, nargs=2, default=[1.0, 0.0], metavar=("H1", "H2"))
    p.add_argument("--samples", type=int, default=5)
    p.add_argument("--swap", action="store_true", help="negative control: exchange the kernel branches")
    _add_quad_args(p)
    common(p)
    p.set_defaults(func=cmd_resolvent_check)

    p = sub.add_parser("hs-compare", help="Hilbert-Schmidt eigenvalues versus shooting eigenvalues")
    bvp_args(p)
    p.add_argument("--z", type=float, default=0.3)
    p.add_argument("--k", type=int, default=5)
    # 8 points on panels of 1/8: 64 Nystrom nodes per unit length
    _add_quad_args(p, max_panel=0.125)
    common(p)
    p.set_defaults(func=cmd_hs_compare)

    p = sub.add_parser("relation-demo", help="finite-dimensional relation checks")
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--trials", type=int, default=50)
    common(p)
    p.set_defaults(func=cmd_relation_demo)
    return parser


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    if args.show_defaults:
        _emit("show-defaults", dict(DEFAULTS), None, args.output, stdout)
        return 0
    if not args.command:
        parser.print_usage(stderr)
        return 2
    try:
        result, rows, code = args.func(args)
    except CanonicalSystemError as exc:
        stderr.write(f"canonsys {args.command}: error: {exc}\n")
        return 1
    _emit(args.command, result, rows, args.output, stdout)
    if code and args.command == "validate":
        for line in result["diagnostics"]:
            stderr.write(f"canonsys validate: {line}\n")
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
