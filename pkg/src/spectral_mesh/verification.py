"""Cross-module verification checks.

Each ``check_*`` function runs one acceptance criterion and returns a
:class:`CheckResult` (measured value, tolerance, pass flag).  The
closed-form models, the generic perturbation formulas and the collocation
oracle are computed independently and compared here.
"""
from __future__ import annotations

import inspect
import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .adjoint import adjoint_realization, lagrange_residual
from .bvp import Eigenfunction, ParameterDirection, ParameterPoint, taylor_data
from .oracle import Window, oracle_eigenvalues, track_split
from .perturbation import (
    fg_matrices,
    keldysh_chain,
    nonderog_split,
    semisimple_group,
    semisimple_split,
    simple_split,
    sort_branches,
)
from .models import branch_point as bp
from .models import dynamo as dy
from .models import rotating_string as rs

EPS_LIST = (1e-3, 5e-4, 2.5e-4)
STRING_NODE = (1, -1, 2, 1)
DYNAMO_NODE = (1, 1, 2, 1)
DYNAMO_PROFILE = "coshalf:1"


@dataclass
class CheckResult:
    name: str
    value: float
    tolerance: float
    passed: bool
    detail: dict = field(default_factory=dict)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status} {self.name}: value={self.value:.3e} tolerance={self.tolerance:.3e}"

    def as_dict(self) -> dict:
        out = asdict(self)
        out["passed"] = bool(self.passed)
        out["value"] = float(self.value)
        out["tolerance"] = float(self.tolerance)
        return out


def _rng(seed):
    return np.random.default_rng(seed)


def _random_polynomial(rng, size, degree=5) -> Eigenfunction:
    coeffs = rng.normal(size=(size, degree + 1)) + 1j * rng.normal(size=(size, degree + 1))
    return Eigenfunction.from_polynomials(coeffs)


def _model_samplers():
    """(name, family factory, random point) for the built-in models."""
    def string_point(rng):
        Om = rng.uniform(-0.9, 0.9)
        p = [Om, rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)]
        lam = complex(rng.normal(), rng.normal()) * 3
        return rs.string_problem(rs.StringParams(*p)), ParameterPoint(lam, p)

    def dynamo_point(rng):
        p = [rng.uniform(-10, 10), rng.uniform(0, 1), rng.uniform(-2, 2)]
        lam = complex(rng.normal(), rng.normal()) * 10
        prof = dy.profile_from_spec("cos:1")
        return dy.dynamo_problem(dy.DynamoParams(p[0], p[2], p[1]), prof), ParameterPoint(lam, p)

    return (("string", string_point), ("dynamo", dynamo_point))


# ---------------------------------------------------------------------------
# 1, 2: adjoint machinery
# ---------------------------------------------------------------------------

def check_lagrange(n_pairs: int = 100, tol: float = 1e-9, seed: int = 1) -> CheckResult:
    rng = _rng(seed)
    t0 = time.perf_counter()
    worst, per_model = 0.0, {}
    for name, sample in _model_samplers():
        fam, pt = sample(rng)
        ar = adjoint_realization(fam, pt)
        vals = []
        for _ in range(n_pairs):
            u = _random_polynomial(rng, fam.size_N)
            v = _random_polynomial(rng, fam.size_N)
            vals.append(lagrange_residual(fam, pt, ar, u, v, relative=True))
        per_model[name] = max(vals)
        worst = max(worst, per_model[name])
    elapsed = time.perf_counter() - t0
    return CheckResult("lagrange_identity", worst, tol, worst < tol and elapsed < 5.0,
                       {"per_model": per_model, "seconds": elapsed, "time_limit": 5.0})


def check_adjoint_reconstruction(n_points: int = 10, tol: float = 1e-12, seed: int = 2) -> CheckResult:
    rng = _rng(seed)
    worst, per_model = 0.0, {}
    for name, sample in _model_samplers():
        errs = []
        for _ in range(n_points):
            fam, pt = sample(rng)
            errs.append(adjoint_realization(fam, pt).reconstruction_error())
        per_model[name] = max(errs)
        worst = max(worst, per_model[name])
    return CheckResult("adjoint_reconstruction", worst, tol, worst < tol, {"per_model": per_model})


# ---------------------------------------------------------------------------
# 3: string spectrum against the mesh
# ---------------------------------------------------------------------------

def string_mesh_values(Omega, im_max, n_max=200):
    vals = {complex(rs.mesh_eigenvalue(n, e, Omega)) for n in range(-n_max, n_max + 1) for e in (-1, 1)}
    return np.array(sorted((v for v in vals if abs(v.imag) <= im_max + 1e-9), key=lambda z: z.imag))


def check_string_oracle(omegas=(0.0, 0.4, -0.4), im_max: float = 10.0, n_nodes: int = 64,
                        tol: float = 1e-7) -> CheckResult:
    t0 = time.perf_counter()
    worst, detail = 0.0, {}
    fam = rs.string_problem()
    for Om in omegas:
        ev = np.array(oracle_eigenvalues(fam, [Om, 0, 0, 0], Window(-np.inf, np.inf, -im_max, im_max), n_nodes))
        exact = string_mesh_values(Om, im_max)
        fwd = max(float(np.abs(exact - z).min()) for z in ev) if len(ev) else np.inf
        # every mesh value strictly inside the window must be present
        inner = exact[np.abs(exact.imag) < im_max - 1e-6]
        back = max(float(np.abs(ev - z).min()) for z in inner) if len(ev) else np.inf
        detail[f"Omega={Om:+.1f}"] = {"n_eigs": int(len(ev)), "oracle_to_mesh": fwd, "mesh_to_oracle": back}
        worst = max(worst, fwd, back)
    elapsed = time.perf_counter() - t0
    detail["seconds"] = elapsed
    return CheckResult("string_mesh_oracle", worst, tol, worst < tol and elapsed < 30.0, detail)


# ---------------------------------------------------------------------------
# node fixtures shared by 4, 5, 7
# ---------------------------------------------------------------------------

def string_fixture(indices=STRING_NODE):
    node = rs.string_node(*indices)
    fam = rs.string_problem(rs.StringParams(node.param))
    pt = rs.node_point(node)
    group = semisimple_group(fam, pt, node.eigenfunctions, node.adjoint_eigenfunctions)
    return node, fam, pt, group


def dynamo_fixture(indices=DYNAMO_NODE, profile: str = DYNAMO_PROFILE):
    node = dy.dynamo_node(*indices)
    prof = dy.profile_from_spec(profile)
    fam = dy.dynamo_problem(dy.DynamoParams(node.param), profile=prof)
    pt = dy.node_point(node)
    ar = adjoint_realization(fam, pt, completion=dy.auxiliary_completion)
    group = semisimple_group(fam, pt, node.eigenfunctions, node.adjoint_eigenfunctions, ar)
    return node, fam, pt, group, prof


def pencil_split(group, direction):
    td = taylor_data(group.family, group.point, ParameterDirection(direction))
    return semisimple_split(*fg_matrices(group, td))


def spanning_directions(dim: int, seed: int) -> np.ndarray:
    """``dim`` generic unit directions (a basis of parameter space)."""
    rng = _rng(seed)
    while True:
        D = rng.normal(size=(dim, dim))
        if abs(np.linalg.det(D)) > 0.1:
            return D / np.linalg.norm(D, axis=1, keepdims=True)


# ---------------------------------------------------------------------------
# 4: second-order residual of the first-order splitting
# ---------------------------------------------------------------------------

def check_splitting_order(lo: float = 1.8, hi: float = 2.2, seed: int = 4, eps=EPS_LIST) -> CheckResult:
    fits = {}
    _, fam, pt, group = string_fixture()
    for k, d in enumerate(spanning_directions(4, seed)):
        rec = track_split(fam, pt, ParameterDirection(d), eps, pencil_split(group, d))
        fits[f"string/dir{k}"] = rec.fitted_exponent
    _, fam, pt, group, _ = dynamo_fixture()
    for k, d in enumerate(spanning_directions(3, seed + 1)):
        rec = track_split(fam, pt, ParameterDirection(d), eps, pencil_split(group, d))
        fits[f"dynamo/dir{k}"] = rec.fitted_exponent
    dev = max(abs(f - 2.0) for f in fits.values())
    ok = all(lo <= f <= hi for f in fits.values())
    return CheckResult("splitting_order", dev, max(2.0 - lo, hi - 2.0), ok, {"exponents": fits})


# ---------------------------------------------------------------------------
# 5: generic pencil against closed forms
# ---------------------------------------------------------------------------

def _relative_set_error(a, b) -> float:
    a, b = np.array(sort_branches(a)), np.array(sort_branches(b))
    if len(a) != len(b):
        return np.inf
    # pair optimally (two branches)
    err = min(np.abs(a - b).max(), np.abs(a - b[::-1]).max())
    return float(err / max(np.abs(b).max(), 1e-300))


def check_closed_form_equivalence(n_dirs: int = 20, tol: float = 1e-6, seed: int = 5) -> CheckResult:
    rng = _rng(seed)
    errs = {}
    node, fam, pt, group = string_fixture()
    worst = 0.0
    for _ in range(n_dirs):
        d = rng.normal(size=4)
        got = pencil_split(group, d).lambda1
        ref = rs.string_split_node(node, *d).increments
        worst = max(worst, _relative_set_error(got, ref))
    errs["string"] = worst
    node, fam, pt, group, prof = dynamo_fixture()
    worst = 0.0
    for _ in range(n_dirs):
        d = rng.normal(size=3)
        got = pencil_split(group, d).lambda1
        ref = dy.dynamo_split_node(node, d[0], d[1], d[2], profile=prof).increments
        worst = max(worst, _relative_set_error(got, ref))
    errs["dynamo"] = worst
    value = max(errs.values())
    return CheckResult("closed_form_equivalence", value, tol, value < tol, {"per_node": errs})


# ---------------------------------------------------------------------------
# 6: supercritical flutter tongue
# ---------------------------------------------------------------------------

def supercritical_probes(n_abs: int = 1, m: int = 2, ks=(0.1, 0.2)):
    """Probe points ``(Omega, k, expected_inside)`` around the tongue."""
    Om0 = (n_abs + m) / (n_abs - m)
    probes = []
    for k in ks:
        # boundary lines solved for Omega at this k
        slopes = [4 * np.pi * n_abs * m * (n_abs - m) / (np.sqrt(n_abs) + s * np.sqrt(m)) ** 2 for s in (1, -1)]
        a, b = sorted(Om0 + k / sl for sl in slopes)
        for t in (0.25, 0.5, 0.75):
            probes.append((a + t * (b - a), k, True))
        for t in (-0.5, 1.5):
            probes.append((a + t * (b - a), k, False))
    return probes


def check_supercritical_tongue(min_agree: int = 9, n_nodes: int = 64, growth_tol: float = 1e-7) -> CheckResult:
    node = rs.string_node(-1, -1, 2, 1)
    lam0 = node.eigenvalue
    agree, rows = 0, []
    for Om, k, expect in supercritical_probes():
        fam = rs.string_problem(rs.StringParams(Om, k))
        ev = oracle_eigenvalues(fam, [Om, k, 0, 0], Window.around(lam0, 0.5), n_nodes)
        growth = max(z.real for z in ev) if ev else -np.inf
        predicted = bool(rs.in_supercritical_tongue(1, 2, Om, k))
        unstable = growth > growth_tol
        agree += unstable == expect and predicted == expect
        rows.append({"Omega": Om, "k": k, "max_re": growth, "inside": expect})
    return CheckResult("supercritical_tongue", agree, min_agree, agree >= min_agree, {"probes": rows})


# ---------------------------------------------------------------------------
# 7: dynamo beta direction
# ---------------------------------------------------------------------------

DYNAMO_BETA_NODES = ((1, 1, 2, 1), (1, 1, 2, -1), (1, -1, 2, 1), (2, 1, 3, 1), (1, 1, 3, -1), (2, -1, 3, 1))


def check_unshifted_root(nodes=DYNAMO_BETA_NODES, tol_zero: float = 1e-10, tol_shift: float = 1e-8) -> CheckResult:
    worst_zero, worst_shift, rows = 0.0, 0.0, []
    for idx in nodes:
        node, fam, pt, group, _ = dynamo_fixture(idx, "cos:1")
        lam1 = pencil_split(group, [0.0, 1.0, 0.0]).lambda1
        lam0 = node.eigenvalue.real
        z = min(lam1, key=abs)
        other = max(lam1, key=abs)
        ez = abs(z)
        es = abs(other + 2 * lam0) / abs(2 * lam0)
        worst_zero, worst_shift = max(worst_zero, ez), max(worst_shift, es)
        rows.append({"node": list(idx), "zero_root": ez, "shift_rel_error": es})
    ok = worst_zero < tol_zero and worst_shift < tol_shift
    return CheckResult("dynamo_unshifted_root", max(worst_zero / tol_zero, worst_shift / tol_shift), 1.0, ok,
                       {"nodes": rows, "zero_root_max": worst_zero, "shift_max": worst_shift})


def check_node_beta_roots(indices, tol_zero: float = 1e-10, tol_shift: float = 1e-8) -> list[CheckResult]:
    """Zero-root and shifted-root checks for one dynamo node (beta direction)."""
    node, fam, pt, group, _ = dynamo_fixture(indices, "cos:1")
    lam1 = pencil_split(group, [0.0, 1.0, 0.0]).lambda1
    z, other = min(lam1, key=abs), max(lam1, key=abs)
    lam0 = node.eigenvalue.real
    es = abs(other + 2 * lam0) / abs(2 * lam0)
    return [CheckResult("beta_zero_root", abs(z), tol_zero, abs(z) < tol_zero),
            CheckResult("beta_shifted_root", es, tol_shift, es < tol_shift)]


# ---------------------------------------------------------------------------
# 8: selection rule
# ---------------------------------------------------------------------------

def check_selection_rule(ks=(1, 2, 3), max_index: int = 6, tol: float = 1e-12) -> CheckResult:
    worst_on, worst_off, count = 0.0, 0.0, 0
    for k in ks:
        prof = dy.CosineProfile(k)
        for node in dy.dynamo_nodes(range(1, max_index + 1), range(1, max_index + 1)):
            j = node.eps * node.n - node.delta * node.m
            val = dy.selection_integral(prof, node, exact=False)
            if 2 * k == abs(j):
                worst_on = max(worst_on, abs(val - 0.5))
            else:
                worst_off = max(worst_off, abs(val))
            count += 1
    value = max(worst_on, worst_off)
    return CheckResult("selection_rule", value, tol, value < tol,
                       {"resonant_error": worst_on, "off_resonant_max": worst_off, "evaluations": count})


# ---------------------------------------------------------------------------
# 9: k = 2 tongue geometry
# ---------------------------------------------------------------------------

def check_tongue_geometry(grid: int = 101, beta: float = 0.1, tol: float = 1e-12) -> CheckResult:
    a = np.linspace(-4 * np.pi, 4 * np.pi, grid)
    g = np.linspace(-20.0, 20.0, grid)
    A, Gm = np.meshgrid(a, g, indexing="ij")
    tongues = dy.dynamo_tongues(2, beta=0.0)
    displayed = dy.k2_beta0_tongues(A, Gm)
    # tongue order: node n = 1, 2, 3 sits at alpha0 = -2pi, 0, 2pi
    disagree = sum(int(np.count_nonzero(t.inside(A, Gm) != d)) for t, d in zip(tongues, displayed))
    offsets = []
    k = 2
    for t in dy.dynamo_tongues(k, beta=beta, include_ellipses=False):
        n = t.node.n
        positive = t.node.param > 0
        n_label = n if n >= k else 2 * k - n
        expected = dy.hyperbolic_gamma_offset(k, n_label, beta, positive or t.node.param == 0)
        offsets.append(abs(t.gamma_offset() - expected))
    off_err = max(offsets)
    ok = disagree == 0 and off_err < tol
    return CheckResult("k2_tongue_geometry", float(disagree) + off_err, tol, ok,
                       {"grid_disagreements": disagree, "offset_error": off_err, "n_tongues": len(tongues)})


# ---------------------------------------------------------------------------
# 10: non-derogatory fixture
# ---------------------------------------------------------------------------

def check_nonderogatory(lo: float = 0.45, hi: float = 0.55, angle_tol: float = 1e-2,
                        eps=EPS_LIST) -> CheckResult:
    fx = bp.branch_point_fixture()
    chain = keldysh_chain(fx.family, fx.point, fx.direct, fx.adjoint)
    direction = ParameterDirection([1.0])
    res = nonderog_split(chain, taylor_data(fx.family, fx.point, direction, r_max=2))
    rec = track_split(fx.family, fx.point, direction, eps, res)
    a1, a2 = rec.branch_angles
    gap = abs(abs(np.angle(np.exp(1j * (a1 - a2)))) - np.pi)
    # mu = 1 reduction on a simple eigenvalue of the same family
    pt, u, v = bp.simple_eigenpair(2.0, -10.0)
    fam = bp.branch_point_problem(2.0)
    td = taylor_data(fam, pt, direction, r_max=1)
    s1 = simple_split(semisimple_group(fam, pt, [u], [v]), td)
    s2 = nonderog_split(keldysh_chain(fam, pt, [u], [v]), td)
    identical = s1.lambda1 == s2.lambda1
    ok = lo <= rec.raw_exponent <= hi and gap < angle_tol and identical
    return CheckResult("nonderogatory_fixture", rec.raw_exponent, 0.05, ok,
                       {"raw_exponent": rec.raw_exponent, "angle_gap": gap, "reduction_identical": identical,
                        "lambda0": [fx.lambda0.real, fx.lambda0.imag], "theta": fx.theta.real,
                        "radicand": [res.radicand.real, res.radicand.imag]})


ACCEPTANCE = (
    ("1", check_lagrange),
    ("2", check_adjoint_reconstruction),
    ("3", check_string_oracle),
    ("4", check_splitting_order),
    ("5", check_closed_form_equivalence),
    ("6", check_supercritical_tongue),
    ("7", check_unshifted_root),
    ("8", check_selection_rule),
    ("9", check_tongue_geometry),
    ("10", check_nonderogatory),
)


def run_check(fn, seed_offset: int = 0) -> CheckResult:
    """Run a check, shifting its default seed by ``seed_offset`` when it has one."""
    params = inspect.signature(fn).parameters
    if seed_offset and "seed" in params:
        return fn(seed=params["seed"].default + seed_offset)
    return fn()


def run_acceptance(selected=None, seed_offset: int = 0) -> list[CheckResult]:
    return [run_check(fn, seed_offset) for key, fn in ACCEPTANCE if selected is None or key in selected]
