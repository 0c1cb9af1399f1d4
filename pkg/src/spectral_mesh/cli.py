"""Command line front end: meshes, nodes, splittings, tongues, verification.

Exit status: 0 on success, 1 when a numerical check fails (the failing check
is named on stderr), 2 for configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__
from .adjoint import adjoint_realization
from .bvp import ParameterDirection, ParameterPoint, constant_coefficient_modes, taylor_data
from .custom import SpecFileError, load_spec_file
from .errors import SpectralMeshError
from .models import dynamo as dy
from .models import rotating_string as rs
from .oracle import DEFAULT_NODES, Window, oracle_eigenvalues, track_split
from .perturbation import fg_matrices, semisimple_group, semisimple_split
from . import verification as ver

MODELS = ("string", "dynamo", "custom-spec-file")
COMMANDS = ("mesh", "nodes", "split", "tongues", "verify", "adjoint-dump")


class ConfigError(ValueError):
    pass


# ---------------------------------------------------------------------------
# argument helpers
# ---------------------------------------------------------------------------

def parse_range(text: str, integer: bool = False):
    """``"a..b"`` -> (a, b); a single value gives (a, a)."""
    parts = text.split("..")
    if len(parts) not in (1, 2) or not all(parts):
        raise ConfigError(f"bad range {text!r}; use a..b")
    conv = int if integer else float
    try:
        lo, hi = conv(parts[0]), conv(parts[-1])
    except ValueError as exc:
        raise ConfigError(f"bad range {text!r}: {exc}") from exc
    if hi < lo:
        raise ConfigError(f"empty range {text!r}")
    return lo, hi


def parse_sign(tok: str) -> int:
    tok = tok.strip()
    if tok in ("+", "+1", "1"):
        return 1
    if tok in ("-", "-1"):
        return -1
    raise ConfigError(f"bad sign {tok!r}; use + or -")


def parse_node(text: str):
    """``"n,m,eps,delta"`` with signs written as + / -."""
    parts = text.split(",")
    if len(parts) != 4:
        raise ConfigError("--node expects n,m,eps,delta (e.g. 1,2,+,+)")
    try:
        n, m = int(parts[0]), int(parts[1])
    except ValueError as exc:
        raise ConfigError(f"bad node indices in {text!r}") from exc
    return n, m, parse_sign(parts[2]), parse_sign(parts[3])


def parse_floats(text: str):
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError as exc:
        raise ConfigError(f"bad number list {text!r}") from exc


def parse_complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", ""))
    except ValueError as exc:
        raise ConfigError(f"bad complex number {text!r}") from exc


def parse_direction(text: str, names) -> np.ndarray:
    if text in names:
        d = np.zeros(len(names))
        d[list(names).index(text)] = 1.0
        return d
    d = np.array(parse_floats(text))
    if len(d) != len(names):
        raise ConfigError(f"direction needs {len(names)} components ({', '.join(names)}) or one of their names")
    return d


NEGATIVE_VALUE = re.compile(r"^-\.?\d")


def _merge_negative_ranges(argv):
    """Allow ``--omega -2..2`` or ``--lambda -3.5`` (argparse would read the value as an option)."""
    out, i = [], 0
    while i < len(argv):
        tok = argv[i]
        if (tok.startswith("--") and "=" not in tok and i + 1 < len(argv)
                and NEGATIVE_VALUE.match(argv[i + 1])):
            out.append(f"{tok}={argv[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def worker_count() -> int:
    raw = os.environ.get("SPECTRAL_MESH_THREADS", "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"SPECTRAL_MESH_THREADS must be an integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigError("SPECTRAL_MESH_THREADS must be positive")
    return n


def parallel_map(fn, items):
    """Map over a thread pool; results come back in input order."""
    items = list(items)
    n = worker_count()
    if n == 1 or len(items) < 2:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _num(v):
    if isinstance(v, (bool, np.bool_)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return repr(float(v) + 0.0)          # + 0.0 folds -0.0 into 0.0
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, np.ndarray):
        return _jsonable(v.tolist())
    if isinstance(v, (complex, np.complexfloating)):
        return [float(v.real) + 0.0, float(v.imag) + 0.0]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, np.integer):
        return int(v)
    if isinstance(v, (float, np.floating)):
        return float(v) + 0.0
    return v


def config_hash(args) -> str:
    cfg = {k: v for k, v in vars(args).items() if k not in ("output", "func")}
    blob = json.dumps(_jsonable(cfg), sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def emit(args, columns, rows, extra=None):
    """Write rows as CSV or JSON (with metadata) to ``args.output`` or stdout."""
    if args.format == "json":
        doc = {"model": args.model, "command": args.command, "version": __version__,
               "config_hash": config_hash(args), "columns": list(columns),
               "rows": [_jsonable(list(r)) for r in rows]}
        if extra:
            doc.update(_jsonable(extra))
        text = json.dumps(doc, sort_keys=True, indent=2) + "\n"
    else:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(columns)
        for r in rows:
            w.writerow([_num(v) for v in r])
        text = buf.getvalue()
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.output, "w", newline="") as fh:
            fh.write(text)


# ---------------------------------------------------------------------------
# model plumbing
# ---------------------------------------------------------------------------

def _custom(args):
    if not args.spec:
        raise ConfigError("--model custom-spec-file needs --spec PATH")
    try:
        return load_spec_file(args.spec)
    except SpecFileError as exc:
        raise ConfigError(str(exc)) from exc


def _names(model):
    return rs.P_NAMES if model == "string" else ("alpha0", "beta", "gamma")


def _builtin_node(args):
    if not args.node:
        raise ConfigError("--node n,m,eps,delta is required")
    n, m, e, d = parse_node(args.node)
    try:
        if args.model == "string":
            node = rs.string_node(n, e, m, d)
        else:
            if n <= 0 or m <= 0:
                raise ConfigError("dynamo node indices must be positive")
            node = dy.dynamo_node(n, e, m, d)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if getattr(node, "critical", False):
        raise ConfigError("node lies on the critical speed |Omega| = 1")
    return node


def _node_setup(args):
    """Family, point, semi-simple group and closed-form evaluator for a node."""
    node = _builtin_node(args)
    if args.model == "string":
        fam = rs.string_problem(rs.StringParams(node.param))
        pt = rs.node_point(node)
        group = semisimple_group(fam, pt, node.eigenfunctions, node.adjoint_eigenfunctions)
        return node, fam, pt, group, lambda d: rs.string_split_node(node, *d).increments
    prof = _profile(args)
    fam = dy.dynamo_problem(dy.DynamoParams(node.param), profile=prof)
    pt = dy.node_point(node)
    ar = adjoint_realization(fam, pt, completion=dy.auxiliary_completion)
    group = semisimple_group(fam, pt, node.eigenfunctions, node.adjoint_eigenfunctions, ar)
    return node, fam, pt, group, lambda d: dy.dynamo_split_node(node, d[0], d[1], d[2], profile=prof).increments


def _profile(args):
    try:
        return dy.profile_from_spec(args.profile)
    except (ValueError, SpectralMeshError) as exc:
        raise ConfigError(f"bad profile {args.profile!r}: {exc}") from exc


def _eps_list(args):
    eps = parse_floats(args.eps_list)
    if len(eps) < 3 or any(e <= 0 for e in eps) or any(a <= b for a, b in zip(eps, eps[1:])):
        raise ConfigError("--eps-list needs at least three strictly decreasing positive values")
    return eps


# ---------------------------------------------------------------------------
# commands
# ---------------------------------------------------------------------------

def cmd_mesh(args):
    if args.points < 2:
        raise ConfigError("--points must be at least 2")
    if args.modes < 0:
        raise ConfigError("--modes must be non-negative")
    if args.model == "custom-spec-file":
        return _mesh_custom(args)
    if args.model == "string":
        lo, hi = parse_range(args.omega)
        grid = np.linspace(lo, hi, args.points)
        lines = [(0, 1)] + [(n, e) for n in range(-args.modes, args.modes + 1) if n for e in (1, -1)]

        def line(ne):
            n, e = ne
            lam = rs.mesh_eigenvalue(n, e, grid)
            return [(x, z.real, z.imag, f"{n}{'+' if e > 0 else '-'}") for x, z in zip(grid, lam)]
    else:
        lo, hi = parse_range(args.alpha0)
        grid = np.linspace(lo, hi, args.points)
        lines = [(n, e) for n in range(1, args.modes + 1) for e in (1, -1)]

        def line(ne):
            n, e = ne
            lam = dy.mesh_eigenvalue(n, e, grid)
            return [(x, float(np.real(z)), 0.0, f"{n}{'+' if e > 0 else '-'}") for x, z in zip(grid, lam)]
    rows = [r for chunk in parallel_map(line, lines) for r in chunk]
    emit(args, ("param", "re_lambda", "im_lambda", "branch_id"), rows)
    return 0


def _mesh_custom(args):
    fam, p0 = _custom(args)
    if not args.sweep_param:
        raise ConfigError("custom mesh needs --sweep-param NAME and --sweep a..b")
    if args.sweep_param not in fam.p_names:
        raise ConfigError(f"unknown parameter {args.sweep_param!r}; have {fam.p_names}")
    idx = fam.p_names.index(args.sweep_param)
    lo, hi = parse_range(args.sweep or "0..1")
    grid = np.linspace(lo, hi, args.points)
    win = _window(args)

    def solve(x):
        p = p0.copy()
        p[idx] = x
        ev = oracle_eigenvalues(fam, p, win, args.n_nodes)
        return [(x, z.real, z.imag, f"rank{k}") for k, z in enumerate(ev)]

    rows = [r for chunk in parallel_map(solve, grid) for r in chunk]
    emit(args, ("param", "re_lambda", "im_lambda", "branch_id"), rows)
    return 0


def _window(args):
    if args.window is None:
        return Window()
    v = parse_floats(args.window)
    if len(v) != 4:
        raise ConfigError("--window expects re_min,re_max,im_min,im_max")
    return Window(*v)


def cmd_nodes(args):
    if args.model == "custom-spec-file":
        raise ConfigError("nodes are only defined for the built-in models")
    nlo, nhi = parse_range(args.n_range, integer=True)
    mlo, mhi = parse_range(args.m_range, integer=True)
    if args.model == "string":
        nodes = rs.string_mesh_nodes(range(nlo, nhi + 1), range(mlo, mhi + 1))
    else:
        if nlo < 1 or mlo < 1:
            raise ConfigError("dynamo indices start at 1")
        nodes = dy.dynamo_nodes(range(nlo, nhi + 1), range(mlo, mhi + 1))
    rows = [(nd.n, nd.m, nd.eps, nd.delta, nd.param, nd.eigenvalue.real, nd.eigenvalue.imag, int(nd.critical))
            for nd in nodes]
    emit(args, ("n", "m", "eps", "delta", "param", "re_lambda", "im_lambda", "critical"), rows)
    return 0


def cmd_split(args):
    if args.model == "custom-spec-file":
        return _split_custom(args)
    node, fam, pt, group, closed = _node_setup(args)
    names = _names(args.model)
    d = parse_direction(args.dir, names)
    res = semisimple_split(*fg_matrices(group, taylor_data(fam, pt, ParameterDirection(d))))
    cf = sorted(closed(d), key=lambda z: (round(z.real, 10), round(z.imag, 10)))
    rows = [(k, z.real, z.imag, c.real, c.imag) for k, (z, c) in enumerate(zip(res.lambda1, cf))]
    extra = {"node": [node.n, node.m, node.eps, node.delta], "lambda0": node.eigenvalue,
             "param": node.param, "direction": list(d)}
    if args.track:
        rec = track_split(fam, pt, ParameterDirection(d), _eps_list(args), res, n_nodes=args.n_nodes)
        extra["oracle"] = {"fitted_exponent": rec.fitted_exponent, "residuals": rec.residuals,
                           "epsilons": rec.epsilons}
    emit(args, ("branch", "re_lambda1", "im_lambda1", "re_closed_form", "im_closed_form"), rows, extra)
    return 0


def _split_custom(args):
    fam, p0 = _custom(args)
    if args.lam is None:
        raise ConfigError("custom split needs --lambda (the multiple eigenvalue)")
    lam0 = parse_complex(args.lam)
    p = np.array(parse_floats(args.params)) if args.params else p0
    pt = ParameterPoint(lam0, p)
    d = parse_direction(args.dir, fam.p_names)
    ar = adjoint_realization(fam, pt)
    expr = fam.expression(lam0, p)
    if not expr.is_constant():
        raise ConfigError("custom split needs constant coefficients")
    u = constant_coefficient_modes(expr, fam.boundary(lam0, p))
    v = constant_coefficient_modes(ar.adjoint_coeff, ar.V)
    if not u or len(u) != len(v):
        raise ConfigError(f"lambda={lam0} is not an eigenvalue with matching adjoint modes "
                          f"({len(u)} direct, {len(v)} adjoint)")
    group = semisimple_group(fam, pt, u, v, ar)
    res = semisimple_split(*fg_matrices(group, taylor_data(fam, pt, ParameterDirection(d))))
    rows = [(k, z.real, z.imag, "", "") for k, z in enumerate(res.lambda1)]
    emit(args, ("branch", "re_lambda1", "im_lambda1", "re_closed_form", "im_closed_form"), rows,
         {"multiplicity": len(u), "n_infinite": res.n_infinite})
    return 0


def cmd_tongues(args):
    if args.grid < 2:
        raise ConfigError("--grid must be at least 2")
    if args.model == "dynamo":
        prof = args.profile
        if not prof.startswith("cos:"):
            raise ConfigError("tongues need a cosine profile cos:k")
        try:
            k = int(prof[4:])
        except ValueError as exc:
            raise ConfigError(f"bad profile {prof!r}") from exc
        if k < 1:
            raise ConfigError("profile index must be >= 1")
        regions = dy.dynamo_tongues(k, beta=args.beta, include_ellipses=not args.principal)
        alo, ahi = parse_range(args.alpha0)
        glo, ghi = parse_range(args.gamma)
        a = np.linspace(alo, ahi, args.grid)
        g = np.linspace(glo, ghi, args.grid)

        if args.boundary:
            def region_rows(t):
                pts = t.boundary(g)
                return [(x, y, t.region_id, 0) for x, y in pts]
        else:
            A, G = np.meshgrid(a, g, indexing="ij")

            def region_rows(t):
                inside = t.inside(A, G)
                return [(x, y, t.region_id, int(f)) for x, y, f in zip(A.ravel(), G.ravel(), inside.ravel())]
        rows = [r for chunk in parallel_map(region_rows, regions) for r in chunk]
        emit(args, ("param1", "param2", "region_id", "inside_flag"), rows,
             {"regions": [{"region_id": t.region_id, "kind": t.kind,
                           "node": [t.node.n, t.node.m, t.node.eps, t.node.delta]} for t in regions]})
        return 0
    if args.model == "string":
        n_abs, m = args.n_abs, args.m
        if n_abs == m or n_abs < 1 or m < 1:
            raise ConfigError("need distinct positive --n-abs and --m")
        Om0 = (n_abs + m) / (n_abs - m)
        olo, ohi = parse_range(args.omega) if args.omega else (Om0 - 0.1, Om0 + 0.1)
        klo, khi = parse_range(args.k_range)
        O, K = np.meshgrid(np.linspace(olo, ohi, args.grid), np.linspace(klo, khi, args.grid), indexing="ij")
        inside = rs.in_supercritical_tongue(n_abs, m, O, K)
        rows = [(x, y, 0, int(f)) for x, y, f in zip(O.ravel(), K.ravel(), inside.ravel())]
        emit(args, ("param1", "param2", "region_id", "inside_flag"), rows)
        return 0
    raise ConfigError("tongues are defined for the built-in models only")


def cmd_verify(args):
    if args.model == "custom-spec-file":
        raise ConfigError("verify runs on the built-in models")
    if args.node:
        checks = _node_checks(args)
    else:
        selected = set(args.criteria.split(",")) if args.criteria else None
        fns = [fn for key, fn in ver.ACCEPTANCE if selected is None or key in selected]
        if not fns:
            raise ConfigError(f"no acceptance criteria match {args.criteria!r}")
        checks = parallel_map(lambda fn: ver.run_check(fn, args.seed), fns)
    passed = all(c.passed for c in checks)
    report = {"model": args.model, "version": __version__, "config_hash": config_hash(args),
              "passed": passed, "checks": [c.as_dict() for c in checks]}
    text = json.dumps(_jsonable(report), sort_keys=True, indent=2) + "\n"
    if args.output in (None, "-"):
        sys.stdout.write(text)
    else:
        with open(args.output, "w") as fh:
            fh.write(text)
    for c in checks:
        print(c.line(), file=sys.stderr)
    if not passed:
        failed = ", ".join(c.name for c in checks if not c.passed)
        print(f"failed checks: {failed}", file=sys.stderr)
        return 1
    return 0


def _node_checks(args):
    if not args.dir:
        raise ConfigError("--node checks need --dir")
    node, fam, pt, group, closed = _node_setup(args)
    names = _names(args.model)
    d = parse_direction(args.dir, names)
    res = semisimple_split(*fg_matrices(group, taylor_data(fam, pt, ParameterDirection(d))))
    ref = closed(d)
    scale = max(float(np.abs(ref).max()), 1.0)
    err = ver._relative_set_error(res.lambda1, ref) * max(float(np.abs(ref).max()), 1e-300) / scale
    checks = [ver.CheckResult("closed_form_equivalence", err, 1e-6, err < 1e-6,
                              {"pencil": res.lambda1, "closed_form": list(ref)})]
    if args.model == "dynamo" and args.dir == "beta":
        checks += ver.check_node_beta_roots((node.n, node.eps, node.m, node.delta))
    if args.track:
        rec = track_split(fam, pt, ParameterDirection(d), _eps_list(args), res, n_nodes=args.n_nodes)
        floor = max(max(r) for r in rec.residuals) < 1e-10
        ok = floor or 1.8 <= rec.fitted_exponent <= 2.2
        checks.append(ver.CheckResult("oracle_residual_order", rec.fitted_exponent, 0.2, ok,
                                      {"residuals": rec.residuals, "exact_to_roundoff": floor}))
    return checks


def cmd_adjoint_dump(args):
    if args.model == "custom-spec-file":
        fam, p0 = _custom(args)
        p = np.array(parse_floats(args.params)) if args.params else p0
    elif args.model == "string":
        fam = rs.string_problem()
        p = np.array(parse_floats(args.params)) if args.params else np.array([0.0, 0.0, 0.0, 0.0])
    else:
        fam = dy.dynamo_problem(dy.DynamoParams(), profile=_profile(args))
        p = np.array(parse_floats(args.params)) if args.params else np.array([0.0, 0.0, 0.0])
    if len(p) != len(fam.p_names):
        raise ConfigError(f"--params needs {len(fam.p_names)} values ({', '.join(fam.p_names)})")
    lam = parse_complex(args.lam) if args.lam is not None else 1j
    pt = ParameterPoint(lam, p)
    ar = adjoint_realization(fam, pt)
    mats = {"U": ar.source.U, "U_tilde": ar.source.U_tilde, "V": ar.V, "V_tilde": ar.V_tilde,
            "concomitant": ar.concomitant.L_block}
    rows = []
    for name in sorted(mats):
        M = np.asarray(mats[name])
        for (i, j), z in np.ndenumerate(M):
            rows.append((name, i, j, z.real, z.imag))
    emit(args, ("matrix", "row", "col", "re", "im"), rows,
         {"lambda": lam, "params": list(p), "reconstruction_error": ar.reconstruction_error()})
    return 0


HANDLERS = {"mesh": cmd_mesh, "nodes": cmd_nodes, "split": cmd_split, "tongues": cmd_tongues,
            "verify": cmd_verify, "adjoint-dump": cmd_adjoint_dump}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="spectral-mesh", description=__doc__.splitlines()[0])
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--model", choices=MODELS, default="string")
    common.add_argument("--spec", help="JSON problem description for --model custom-spec-file")
    common.add_argument("--output", "-o", help="output file (default stdout)")
    common.add_argument("--format", choices=("csv", "json"), default="csv")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--n-nodes", type=int, default=DEFAULT_NODES, help="collocation nodes of the oracle")
    common.add_argument("--eps-list", default="1e-3,5e-4,2.5e-4")
    common.add_argument("--profile", default="cos:1", help="dynamo profile: cos:k or coshalf:j")

    p = sub.add_parser("mesh", parents=[common], help="branch lines of the spectral mesh")
    p.add_argument("--omega", default="-2..2", help="string: Omega range a..b")
    p.add_argument("--alpha0", default="-20..20", help="dynamo: alpha0 range a..b")
    p.add_argument("--modes", type=int, default=30)
    p.add_argument("--points", type=int, default=401)
    p.add_argument("--sweep-param", help="custom: parameter to sweep")
    p.add_argument("--sweep", help="custom: sweep range a..b")
    p.add_argument("--window", help="custom: re_min,re_max,im_min,im_max")

    p = sub.add_parser("nodes", parents=[common], help="double eigenvalues at crossings")
    p.add_argument("--n-range", default="1..3")
    p.add_argument("--m-range", default="1..3")

    p = sub.add_parser("split", parents=[common], help="first-order splitting at a node")
    p.add_argument("--node", help="n,m,eps,delta, e.g. 1,2,-,+")
    p.add_argument("--dir", required=True, help="parameter name or comma-separated direction")
    p.add_argument("--track", action="store_true", help="also fit the oracle drift")
    p.add_argument("--lambda", dest="lam", help="custom: multiple eigenvalue")
    p.add_argument("--params", help="custom: parameter vector")

    p = sub.add_parser("tongues", parents=[common], help="instability regions")
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--alpha0", default="-15..15")
    p.add_argument("--gamma", default="0..20")
    p.add_argument("--grid", type=int, default=101)
    p.add_argument("--boundary", action="store_true", help="emit boundary points instead of a raster")
    p.add_argument("--principal", action="store_true", help="dynamo: skip the elliptic regions")
    p.add_argument("--omega", help="string: Omega range (default: around the node)")
    p.add_argument("--k-range", default="0..0.3")
    p.add_argument("--n-abs", type=int, default=1)
    p.add_argument("--m", type=int, default=2)

    p = sub.add_parser("verify", parents=[common], help="run verification checks")
    p.add_argument("--node", help="n,m,eps,delta; without it the acceptance suite runs")
    p.add_argument("--dir", help="direction for --node checks (name or vector)")
    p.add_argument("--track", action="store_true")
    p.add_argument("--criteria", help="comma-separated acceptance criteria (default all)")

    p = sub.add_parser("adjoint-dump", parents=[common], help="adjoint boundary matrices at a point")
    p.add_argument("--lambda", dest="lam")
    p.add_argument("--params")
    return ap


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(_merge_negative_ranges(argv))
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.n_nodes < 4:
            raise ConfigError("--n-nodes must be at least 4")
        return HANDLERS[args.command](args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except SpectralMeshError as exc:
        print(f"numerical failure ({type(exc).__name__}): {exc}", file=sys.stderr)
        return 1
    except BrokenPipeError:
        # downstream closed the pipe (e.g. ``| head``)
        sys.stderr.close()
        return 0


if __name__ == "__main__":
    sys.exit(main())
