"""First-order splitting of multiple eigenvalues under parameter perturbation.

Semi-simple eigenvalues split linearly in epsilon with coefficients solving
the mu x mu pencil ``det(F + lambda1 G) = 0``.  A non-derogatory eigenvalue
(one Keldysh chain of length mu) splits into mu branches
``lambda0 + lambda1 epsilon^{1/mu}`` with lambda1 a mu-th root.

Every matrix element is a volume term (quadrature) plus a boundary term
``t(v)^* V~^* U_rs t(u)`` built from the adjoint realization.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from math import factorial

import numpy as np
import scipy.linalg as sla

from .adjoint import AdjointRealization, adjoint_boundary_lambda_derivatives, adjoint_realization
from .bvp import (
    DEFAULT_QUADRATURE_NODES,
    DifferentialExpression,
    Eigenfunction,
    ParameterPoint,
    ProblemFamily,
    TaylorData,
    gauss_legendre,
    l2_norm_of_values,
    taylor_data,
    trace_vector,
)
from .errors import DegeneratePencil, EigenResidualError, VanishingDenominator

RESIDUAL_TOL = 1e-8
PENCIL_TOL = 1e-10
VANISHING_TOL = 1e-12


def _sort_key(z: complex):
    return (round(z.real, 10), round(z.imag, 10))


def sort_branches(values) -> list[complex]:
    return sorted((complex(z) for z in values), key=_sort_key)


@dataclass(frozen=True)
class SemiSimpleGroup:
    family: ProblemFamily
    point: ParameterPoint
    eigenfns: tuple
    adjoint_eigenfns: tuple
    adjoint_real: AdjointRealization

    @property
    def lambda0(self) -> complex:
        return self.point.lambda0

    @property
    def mu(self) -> int:
        return len(self.eigenfns)


@dataclass(frozen=True)
class KeldyshChain:
    family: ProblemFamily
    point: ParameterPoint
    direct: tuple
    adjoint: tuple
    adjoint_real: AdjointRealization

    @property
    def lambda0(self) -> complex:
        return self.point.lambda0

    @property
    def mu(self) -> int:
        return len(self.direct)


@dataclass
class SplittingResult:
    lambda1: list
    kind: str                        # "semisimple", "nonderogatory" or "simple"
    F: np.ndarray | None = None
    G: np.ndarray | None = None
    numerator: complex | None = None
    denominator: complex | None = None
    radicand: complex | None = None
    c_vectors: list = field(default_factory=list)
    n_infinite: int = 0
    degenerate: bool = False
    exponent: float = 1.0            # lambda - lambda0 ~ lambda1 * eps**exponent

    @property
    def mu(self) -> int:
        return len(self.lambda1) + self.n_infinite

    def predicted(self, lambda0: complex, eps: float) -> np.ndarray:
        return lambda0 + np.asarray(self.lambda1) * eps**self.exponent


# ---------------------------------------------------------------------------
# residual checks
# ---------------------------------------------------------------------------

def eigen_residual(expr: DifferentialExpression, U: np.ndarray, u: Eigenfunction,
                   n_nodes: int = DEFAULT_QUADRATURE_NODES) -> tuple[float, float]:
    """``(||L u||, |U t(u)|)`` for ``u`` scaled to unit L2 norm."""
    x, _ = gauss_legendre(n_nodes)
    nrm = u.norm(n_nodes)
    if nrm == 0:
        raise EigenResidualError("zero function is not an eigenfunction")
    vol = l2_norm_of_values(expr.apply(u, x), n_nodes) / nrm
    bnd = float(np.linalg.norm(U @ trace_vector(u, expr.order, expr.size))) / nrm
    return vol, bnd


def semisimple_group(family: ProblemFamily, point: ParameterPoint, eigenfns, adjoint_eigenfns,
                     adjoint_real: AdjointRealization | None = None,
                     tol: float = RESIDUAL_TOL) -> SemiSimpleGroup:
    """Validate a declared semi-simple group and bundle it with its adjoint data."""
    eigenfns, adjoint_eigenfns = tuple(eigenfns), tuple(adjoint_eigenfns)
    if len(eigenfns) != len(adjoint_eigenfns) or not eigenfns:
        raise ValueError("need the same positive number of direct and adjoint eigenfunctions")
    adjoint_real = adjoint_real or adjoint_realization(family, point)
    expr = family.expression(point.lambda0, point.p0)
    U = family.boundary(point.lambda0, point.p0)
    for label, fns, e, B in (("eigenfunction", eigenfns, expr, U),
                             ("adjoint eigenfunction", adjoint_eigenfns, adjoint_real.adjoint_coeff,
                              adjoint_real.V)):
        for j, f in enumerate(fns):
            vol, bnd = eigen_residual(e, B, f)
            if vol > tol or bnd > tol:
                raise EigenResidualError(f"{label} {j}: residuals {vol:.2e} (volume), {bnd:.2e} (boundary)")
    for fns, label in ((eigenfns, "eigenfunctions"), (adjoint_eigenfns, "adjoint eigenfunctions")):
        gram = np.array([[_product(a, b) for a in fns] for b in fns])
        if np.linalg.matrix_rank(gram, tol=1e-8 * np.abs(gram).max()) < len(fns):
            raise EigenResidualError(f"{label} are linearly dependent")
    return SemiSimpleGroup(family, point, eigenfns, adjoint_eigenfns, adjoint_real)


def _product(u: Eigenfunction, v: Eigenfunction) -> complex:
    x, w = gauss_legendre(DEFAULT_QUADRATURE_NODES)
    return complex(np.einsum("k,kc,kc->", w, np.conj(v(x)), u(x)))


def keldysh_chain(family, point, direct, adjoint, adjoint_real=None) -> KeldyshChain:
    """Bundle a chain; validate with :func:`keldysh_residuals`."""
    direct, adjoint = tuple(direct), tuple(adjoint)
    if len(direct) != len(adjoint) or not direct:
        raise ValueError("direct and adjoint chains must have the same positive length")
    adjoint_real = adjoint_real or adjoint_realization(family, point)
    return KeldyshChain(family, point, direct, adjoint, adjoint_real)


# ---------------------------------------------------------------------------
# the bilinear element  <L u, v> + t(v)^* V~^* U t(u)
# ---------------------------------------------------------------------------

def _element(expr: DifferentialExpression, U: np.ndarray, u: Eigenfunction, v: Eigenfunction,
             V_tilde: np.ndarray, n_nodes: int) -> complex:
    x, w = gauss_legendre(n_nodes)
    vol = np.einsum("k,kc,kc->", w, np.conj(v(x)), expr.apply(u, x))
    m, N = expr.order, expr.size
    tu, tv = trace_vector(u, m, N), trace_vector(v, m, N)
    bnd = tv.conj() @ V_tilde.conj().T @ U @ tu
    return complex(vol + bnd)


def fg_matrices(group: SemiSimpleGroup, td: TaylorData,
                n_nodes: int = DEFAULT_QUADRATURE_NODES) -> tuple[np.ndarray, np.ndarray]:
    """The mu x mu matrices F (parameter direction) and G (lambda direction)."""
    mu = group.mu
    Vt = group.adjoint_real.V_tilde
    F = np.zeros((mu, mu), dtype=complex)
    G = np.zeros((mu, mu), dtype=complex)
    for i, v in enumerate(group.adjoint_eigenfns):
        for j, u in enumerate(group.eigenfns):
            F[i, j] = _element(td.L_01, td.U_01, u, v, Vt, n_nodes)
            G[i, j] = _element(td.L_r0[1], td.U_r0[1], u, v, Vt, n_nodes)
    return F, G


def semisimple_split(F, G, tol: float = PENCIL_TOL) -> SplittingResult:
    """Roots of ``det(F + lambda1 G) = 0`` from ``-F c = lambda1 G c``."""
    F = np.atleast_2d(np.asarray(F, dtype=complex))
    G = np.atleast_2d(np.asarray(G, dtype=complex))
    if F.shape != G.shape or F.shape[0] != F.shape[1]:
        raise ValueError("F and G must be square matrices of equal size")
    mu = F.shape[0]
    gs = np.linalg.svd(G, compute_uv=False)
    g_singular = gs[-1] < tol * max(gs[0], 1e-300)
    if g_singular:
        # regular iff det(F + z G) is not identically zero
        probes = [np.linalg.det(F + z * G) for z in (0.37 + 0.21j, -1.13 + 0.6j, 2.3 - 0.4j)]
        scale = max(np.linalg.norm(F), np.linalg.norm(G), 1e-300) ** mu
        if max(abs(d) for d in probes) < tol * scale:
            raise DegeneratePencil("F + lambda1 G is a singular pencil; first-order theory is insufficient")
    ab, vecs = sla.eig(-F, G, homogeneous_eigvals=True)
    alpha, beta = ab
    finite, cvecs, n_inf = [], [], 0
    bscale = max(np.abs(beta).max(), 1e-300)
    for k in range(mu):
        if abs(beta[k]) <= tol * max(abs(alpha[k]), bscale):
            n_inf += 1
            continue
        finite.append(alpha[k] / beta[k])
        c = vecs[:, k]
        cvecs.append(c / np.linalg.norm(c))
    order = sorted(range(len(finite)), key=lambda k: _sort_key(finite[k]))
    return SplittingResult(
        lambda1=[complex(finite[k]) for k in order],
        kind="semisimple" if mu > 1 else "simple",
        F=F, G=G,
        c_vectors=[cvecs[k] for k in order],
        n_infinite=n_inf,
        degenerate=n_inf > 0,
    )


def _numerator(chain_or_group, td: TaylorData, u0, v0, n_nodes) -> complex:
    Vt = chain_or_group.adjoint_real.V_tilde
    return _element(td.L_01, td.U_01, u0, v0, Vt, n_nodes)


def simple_split(group, td: TaylorData, n_nodes: int = DEFAULT_QUADRATURE_NODES,
                 tol: float = VANISHING_TOL) -> SplittingResult:
    """Derivative ``lambda1 = -numerator / denominator`` of a simple eigenvalue."""
    u0, v0 = _first_pair(group)
    num = _numerator(group, td, u0, v0, n_nodes)
    den = _element(td.L_r0[1], td.U_r0[1], u0, v0, group.adjoint_real.V_tilde, n_nodes)
    _check_denominator(den, u0, v0, n_nodes, tol)
    lam1 = -num / den
    return SplittingResult([complex(lam1)], "simple", numerator=num, denominator=den, radicand=lam1,
                           F=np.array([[num]]), G=np.array([[den]]))


def _first_pair(obj):
    if isinstance(obj, SemiSimpleGroup):
        if obj.mu != 1:
            raise ValueError("simple_split needs a group of multiplicity one")
        return obj.eigenfns[0], obj.adjoint_eigenfns[0]
    return obj.direct[0], obj.adjoint[0]


def _check_denominator(den, u0, v0, n_nodes, tol):
    scale = u0.norm(n_nodes) * v0.norm(n_nodes)
    if abs(den) <= tol * max(scale, 1e-300):
        raise VanishingDenominator(f"denominator {abs(den):.2e} vanishes; eigenvalue is not simple in the required sense")


def nonderog_split(chain: KeldyshChain, td: TaylorData, n_nodes: int = DEFAULT_QUADRATURE_NODES,
                   tol: float = VANISHING_TOL) -> SplittingResult:
    """mu-th root splitting ``lambda0 + lambda1 eps^{1/mu}`` of a Keldysh chain."""
    mu = chain.mu
    if td.r_max < mu:
        raise ValueError(f"Taylor data must provide lambda-derivatives up to order {mu}")
    u0, v0 = chain.direct[0], chain.adjoint[0]
    Vt = chain.adjoint_real.V_tilde
    num = _numerator(chain, td, u0, v0, n_nodes)
    den = 0j
    for r in range(1, mu + 1):
        den += _element(td.L_r0[r], td.U_r0[r], chain.direct[mu - r], v0, Vt, n_nodes) / factorial(r)
    _check_denominator(den, u0, v0, n_nodes, tol)
    radicand = -num / den
    scale = u0.norm(n_nodes) * v0.norm(n_nodes) * max(1.0, float(np.linalg.norm(td.direction.pdot)))
    degenerate = abs(num) <= tol * scale
    if mu == 1:
        roots = [radicand]
    elif degenerate:
        roots = [0j] * mu
    else:
        base = abs(radicand) ** (1.0 / mu) * np.exp(1j * np.angle(radicand) / mu)
        roots = [base * np.exp(2j * np.pi * k / mu) for k in range(mu)]
    kind = "nonderogatory" if mu > 1 else "simple"
    return SplittingResult(
        lambda1=[complex(z) for z in roots] if mu == 1 else sort_branches(roots),
        kind=kind, numerator=num, denominator=den, radicand=radicand,
        F=np.array([[num]]), G=np.array([[den]]),
        degenerate=degenerate, exponent=1.0 / mu,
    )


# ---------------------------------------------------------------------------
# Keldysh chain diagnostics and Puiseux eigenvector terms
# ---------------------------------------------------------------------------

@dataclass
class ChainReport:
    direct: list
    direct_boundary: list
    adjoint: list
    adjoint_boundary: list
    orthogonality: list

    def max_residual(self) -> float:
        vals = self.direct + self.direct_boundary + self.adjoint + self.adjoint_boundary + self.orthogonality
        return max(vals) if vals else 0.0


def keldysh_residuals(chain: KeldyshChain, family: ProblemFamily | None = None,
                      point: ParameterPoint | None = None,
                      n_nodes: int = DEFAULT_QUADRATURE_NODES) -> ChainReport:
    """Residual norms of the direct chain, adjoint chain and orthogonality sums."""
    family = family or chain.family
    point = point or chain.point
    mu = chain.mu
    td = taylor_data(family, point, _zero_direction(point), r_max=max(mu - 1, 1))
    x, _ = gauss_legendre(n_nodes)
    m, N = family.order_m, family.size_N
    ar = chain.adjoint_real
    Vt = ar.V_tilde

    direct, direct_b = [], []
    for j, uj in enumerate(chain.direct):
        vol = td.L_r0[0].apply(uj, x)
        bnd = td.U_r0[0] @ trace_vector(uj, m, N)
        for r in range(1, j + 1):
            vol = vol + td.L_r0[r].apply(chain.direct[j - r], x) / factorial(r)
            bnd = bnd + td.U_r0[r] @ trace_vector(chain.direct[j - r], m, N) / factorial(r)
        direct.append(l2_norm_of_values(vol, n_nodes))
        direct_b.append(float(np.linalg.norm(bnd)))

    adj_exprs = [e.adjoint() for e in td.L_r0]
    adj_exprs[0] = ar.adjoint_coeff
    Vs = adjoint_boundary_lambda_derivatives(family, point, ar.source.U_tilde, max(mu - 1, 1))
    # use the realization's own V for the zeroth order term
    Vs[0] = (ar.V, ar.V_tilde)
    adjoint, adjoint_b = [], []
    for j, vj in enumerate(chain.adjoint):
        vol = adj_exprs[0].apply(vj, x)
        bnd = Vs[0][0] @ trace_vector(vj, m, N)
        for r in range(1, j + 1):
            vol = vol + adj_exprs[r].apply(chain.adjoint[j - r], x) / factorial(r)
            bnd = bnd + Vs[r][0] @ trace_vector(chain.adjoint[j - r], m, N) / factorial(r)
        adjoint.append(l2_norm_of_values(vol, n_nodes))
        adjoint_b.append(float(np.linalg.norm(bnd)))

    ortho = []
    v0 = chain.adjoint[0]
    for j in range(1, mu):
        s = 0j
        for r in range(1, j + 1):
            s += _element(td.L_r0[r], td.U_r0[r], chain.direct[j - r], v0, Vt, n_nodes) / factorial(r)
        ortho.append(abs(s))
    return ChainReport(direct, direct_b, adjoint, adjoint_b, ortho)


def _zero_direction(point):
    from .bvp import ParameterDirection
    return ParameterDirection(np.zeros_like(point.p0))


def reconstruct_wr(chain: KeldyshChain, lambda1_branch: complex, r: int) -> tuple[Eigenfunction, bool]:
    """Eigenvector term ``w_r`` of the Puiseux series from the chain.

    Only lambda1 is known, so the composition sum keeps the single all-ones
    composition: ``w_r = lambda1**r u_r``.  The flag is True when terms
    involving lambda2 and higher were dropped (r >= 2).
    """
    if r < 0 or r > chain.mu - 1:
        raise ValueError(f"r must lie in 0..{chain.mu - 1}")
    if r == 0:
        return chain.direct[0], False
    return complex(lambda1_branch) ** r * chain.direct[r], r >= 2
