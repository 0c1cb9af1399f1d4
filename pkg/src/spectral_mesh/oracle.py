"""Brute-force spectra by Chebyshev collocation.

The operator is discretized on Chebyshev-Gauss-Lobatto points of [0, 1]
(optionally stretched by the Kosloff-Tal-Ezer map, which spreads the nodes
more evenly and resolves oscillatory modes with fewer points);
``mN`` collocation rows next to the endpoints are replaced by the boundary
conditions.  The polynomial dependence on lambda is recovered by sampling
on a circle, and the matrix polynomial is linearized in companion form and
solved densely.  Nothing here uses the perturbation formulas, except that
:func:`track_split` matches its eigenvalues against a given prediction.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.optimize import linear_sum_assignment

from .bvp import ParameterDirection, ParameterPoint, ProblemFamily, chebyshev_points
from .errors import MatchingAmbiguous, NonPolynomialLambda, SingularPencil

DEFAULT_NODES = 64
DEFAULT_MAP = 0.8                    # Kosloff-Tal-Ezer parameter; None gives plain CGL
DEFECTIVE_MERGE = 1e-5
BOUNDARY_RESIDUAL_TOL = 1e-6
_LAMBDA_SAMPLES = 16
_POLY_TOL = 1e-11


def chebyshev_matrix(n: int, map_alpha: float | None = None) -> tuple[np.ndarray, np.ndarray]:
    """Nodes on [0, 1] and the first-derivative matrix (barycentric form).

    With ``map_alpha`` in (0, 1) the CGL points ``xi`` are moved to
    ``arcsin(alpha xi) / arcsin(alpha)`` and the matrix picks up the Jacobian.
    """
    x = chebyshev_points(n)
    if n == 1:
        return x, np.zeros((1, 1))
    c = np.ones(n)
    c[0] = c[-1] = 2.0
    c *= (-1.0) ** np.arange(n)
    dx = x[:, None] - x[None, :]
    D = np.outer(c, 1.0 / c) / (dx + np.eye(n))
    D -= np.diag(D.sum(axis=1))          # negative-sum trick for the diagonal
    if map_alpha is None:
        return x, D
    if not 0.0 < map_alpha < 1.0:
        raise ValueError("map_alpha must lie in (0, 1)")
    xi = 2.0 * x - 1.0
    asa = np.arcsin(map_alpha)
    y = np.arcsin(map_alpha * xi) / asa
    jac = map_alpha / (asa * np.sqrt(1.0 - (map_alpha * xi) ** 2))
    return 0.5 * (y + 1.0), D / jac[:, None]


@dataclass(frozen=True)
class Window:
    """Axis-aligned box in the complex plane."""
    re_min: float = -np.inf
    re_max: float = np.inf
    im_min: float = -np.inf
    im_max: float = np.inf

    @classmethod
    def around(cls, center: complex, radius: float) -> "Window":
        c = complex(center)
        return cls(c.real - radius, c.real + radius, c.imag - radius, c.imag + radius)

    def contains(self, z) -> np.ndarray:
        z = np.asarray(z)
        return ((z.real >= self.re_min) & (z.real <= self.re_max)
                & (z.imag >= self.im_min) & (z.imag <= self.im_max))

    @property
    def empty(self) -> bool:
        return self.re_min > self.re_max or self.im_min > self.im_max


@dataclass
class DiscreteProblem:
    n_nodes: int
    lambda_degree: int
    companion_dim: int
    matrices: tuple                  # (A, B) of the linear pencil A y = mu B y
    poly: list                       # coefficient matrices P_j of P(lambda)
    lambda_scale: float              # lambda = lambda_scale * mu
    boundary_rows: np.ndarray        # row indices replaced by boundary conditions
    ode_rows: list                   # the displaced ODE rows, per power of lambda
    size_N: int


def _operator_matrices(family: ProblemFamily, lam, p, x, Dpows):
    """ODE collocation matrix and boundary rows at a single lambda."""
    m, N = family.order_m, family.size_N
    n = len(x)
    L = np.asarray(family.coeff(x, lam, p, 0))                   # (m+1, n, N, N)
    # row (k, a), column (l, b): sum_j L[j, k, a, b] D^{m-j}[k, l]
    ops = np.stack([Dpows[m - j] for j in range(m + 1)])         # (m+1, n, n)
    M = np.einsum("jkab,jkl->kalb", L, ops).reshape(n * N, n * N)
    T = np.zeros((2 * m * N, n * N), dtype=complex)
    eye = np.eye(N)
    for e, node in ((0, 0), (1, n - 1)):
        for i in range(m):
            for a in range(N):
                T[e * m * N + i * N + a] = np.kron(Dpows[i][node], eye[a])
    B = family.boundary(lam, p) @ T
    return M, B


def _replaced_rows(n: int, m: int, N: int) -> np.ndarray:
    left = list(range((m + 1) // 2))
    right = list(range(n - m // 2, n))
    return np.array([k * N + a for k in left + right for a in range(N)])


def collocate(family: ProblemFamily, p, lambda_degree: int | None = None,
              n_nodes: int = DEFAULT_NODES, map_alpha: float | None = DEFAULT_MAP) -> DiscreteProblem:
    """Collocation matrix polynomial ``P(lambda) = sum_j lambda^j P_j`` and its companion pencil."""
    deg = lambda_degree if lambda_degree is not None else family.lambda_degree
    if deg is None or deg < 1:
        raise ValueError("lambda_degree must be a positive integer")
    p = np.atleast_1d(np.asarray(p, dtype=float))
    m, N = family.order_m, family.size_N
    x, D = chebyshev_matrix(n_nodes, map_alpha)
    Dpows = [np.eye(n_nodes)]
    for _ in range(m):
        Dpows.append(Dpows[-1] @ D)
    rows = _replaced_rows(n_nodes, m, N)

    K = max(_LAMBDA_SAMPLES, 2 * (deg + 1))
    z = np.exp(2j * np.pi * np.arange(K) / K)
    samples = []
    for zk in z:
        M, B = _operator_matrices(family, zk, p, x, Dpows)
        ode = M[rows].copy()
        M[rows] = B
        samples.append((M, ode))
    Ms = np.stack([s[0] for s in samples])
    odes = np.stack([s[1] for s in samples])
    coeffs = np.fft.fft(Ms, axis=0) / K
    ode_coeffs = np.fft.fft(odes, axis=0) / K
    scale = max(np.abs(coeffs).max(), 1e-300)
    if np.abs(coeffs[deg + 1:]).max(initial=0.0) > _POLY_TOL * scale:
        raise NonPolynomialLambda(f"lambda-dependence is not a polynomial of degree {deg}")
    poly = [c for c in coeffs[: deg + 1]]
    ode_rows = [c for c in ode_coeffs[: deg + 1]]
    return _linearize(poly, ode_rows, rows, n_nodes, N)


def _linearize(poly, ode_rows, rows, n_nodes, N) -> DiscreteProblem:
    deg = len(poly) - 1
    dim = poly[0].shape[0]
    n0, nd = np.linalg.norm(poly[0]), np.linalg.norm(poly[-1])
    sigma = (n0 / nd) ** (1.0 / deg) if n0 > 0 and nd > 0 else 1.0
    P = [c * sigma**j for j, c in enumerate(poly)]
    # row equilibration of the stacked coefficients
    r = np.max([np.abs(c).max(axis=1) for c in P], axis=0)
    r[r == 0] = 1.0
    P = [c / r[:, None] for c in P]
    if deg == 1:
        A, B = -P[0], P[1]
    else:
        A = np.zeros((deg * dim, deg * dim), dtype=complex)
        B = np.eye(deg * dim, dtype=complex)
        for j in range(deg - 1):
            A[j * dim:(j + 1) * dim, (j + 1) * dim:(j + 2) * dim] = np.eye(dim)
        for j in range(deg):
            A[(deg - 1) * dim:, j * dim:(j + 1) * dim] = -P[j]
        B[(deg - 1) * dim:, (deg - 1) * dim:] = P[deg]
    return DiscreteProblem(n_nodes, deg, deg * dim, (A, B), poly, float(sigma),
                           np.asarray(rows), ode_rows, N)


def _polyval(mats, lam):
    out = np.zeros_like(mats[0])
    for c in reversed(mats):
        out = out * lam + c
    return out


def boundary_residual(dp: DiscreteProblem, lam: complex, y: np.ndarray) -> float:
    """Relative ODE residual on the rows displaced by the boundary conditions.

    Those rows are not enforced by the pencil, so a resolved eigenvector
    satisfies them to discretization accuracy while spurious modes do not.
    """
    res = np.linalg.norm(_polyval(dp.ode_rows, lam) @ y)
    scale = sum(np.linalg.norm(c, 2) * abs(lam) ** j for j, c in enumerate(dp.ode_rows))
    return float(res / max(scale * np.linalg.norm(y), 1e-300))


def _merge_defective(vals, vecs, tol):
    """Replace numerically defective clusters by their mean.

    A Jordan block of size k perturbed by round-off splits into a ring of
    radius ~ eps**(1/k) with nearly parallel eigenvectors; the mean of the
    ring is accurate to O(eps).  Eigenvalues closer than
    ``tol * max(1, |lam|)`` whose eigenvectors are parallel to within
    ``tol`` form such a cluster.
    """
    n = len(vals)
    if n < 2 or tol is None:
        return vals
    z = np.asarray(vals)
    Y = np.column_stack([v / np.linalg.norm(v) for v in vecs])
    close = np.abs(z[:, None] - z[None, :]) < tol * np.maximum(1.0, np.abs(z))[:, None]
    parallel = np.abs(Y.conj().T @ Y) > 1.0 - tol
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in zip(*np.nonzero(np.triu(close & parallel, 1))):
        parent[find(i)] = find(j)
    out = list(z)
    groups: dict[int, list[int]] = {}
    for i in range(n):
        groups.setdefault(find(i), []).append(i)
    for members in groups.values():
        if len(members) > 1:
            mean = complex(z[members].mean())
            for i in members:
                out[i] = mean
    return [complex(v) for v in out]


def spectrum(dp: DiscreteProblem, window: Window | None = None,
             residual_tol: float = BOUNDARY_RESIDUAL_TOL, merge_tol: float | None = DEFECTIVE_MERGE,
             return_vectors: bool = False):
    """Eigenvalues of the discrete problem inside ``window`` (sorted by (Re, Im)).

    Eigenvalues at infinity and modes whose displaced-row residual exceeds
    ``residual_tol`` are dropped; numerically defective clusters are
    averaged (``merge_tol=None`` disables this).
    """
    window = window or Window()
    if window.empty:
        return ([], []) if return_vectors else []
    A, B = dp.matrices
    (alpha, beta), vecs = sla.eig(A, B, homogeneous_eigvals=True)
    scale = max(np.abs(alpha).max(), np.abs(beta).max(), 1e-300)
    indeterminate = (np.abs(alpha) < 1e-13 * scale) & (np.abs(beta) < 1e-13 * scale)
    if indeterminate.any():
        raise SingularPencil(f"{int(indeterminate.sum())} indeterminate eigenvalues (0/0): the pencil is singular")
    dim = dp.companion_dim // dp.lambda_degree
    vals, out_vecs = [], []
    for k in np.flatnonzero(np.abs(beta) > 1e-13 * np.abs(alpha)):
        lam = complex(dp.lambda_scale * alpha[k] / beta[k])
        y = vecs[:dim, k]
        if np.linalg.norm(y) == 0:
            continue
        y = y / np.linalg.norm(y)
        if boundary_residual(dp, lam, y) > residual_tol:
            continue
        vals.append(lam)
        out_vecs.append(y)
    vals = _merge_defective(vals, out_vecs, merge_tol)
    keep = [k for k, v in enumerate(vals) if window.contains(v)]
    keep.sort(key=lambda k: (round(vals[k].real, 10), round(vals[k].imag, 10)))
    if return_vectors:
        return [vals[k] for k in keep], [out_vecs[k] for k in keep]
    return [vals[k] for k in keep]


def oracle_eigenvalues(family: ProblemFamily, p, window: Window | None = None,
                       n_nodes: int = DEFAULT_NODES, map_alpha: float | None = DEFAULT_MAP,
                       **kw) -> list[complex]:
    """Shortcut for ``spectrum(collocate(...), window)``."""
    return spectrum(collocate(family, p, None, n_nodes, map_alpha), window, **kw)


@dataclass
class DriftRecord:
    epsilons: list
    matched_eigs: list               # per epsilon, one oracle eigenvalue per branch
    predictions: list
    residuals: list                  # per epsilon, |lambda_exact - lambda0 - prediction| per branch
    drifts: list                     # per epsilon, |lambda_exact - lambda0| per branch
    fitted_exponent: float
    fitted_coefficient: complex
    raw_exponent: float
    raw_coefficient: float
    branch_angles: list = field(default_factory=list)


def _fit(eps, vals):
    le = np.log(np.asarray(eps, dtype=float))
    lv = np.log(np.maximum(np.asarray(vals, dtype=float), 1e-300))
    slope, intercept = np.polyfit(le, lv, 1)
    return float(slope), float(np.exp(intercept))


def _match(candidates, predicted, lam0, tol):
    if len(candidates) < len(predicted):
        raise MatchingAmbiguous(f"only {len(candidates)} oracle eigenvalues near {lam0} for {len(predicted)} branches")
    cost = np.abs(np.subtract.outer(np.asarray(predicted), np.asarray(candidates)))
    for i in range(len(predicted)):
        order = np.argsort(cost[i])
        if len(order) > 1:
            c1, c2 = candidates[order[0]], candidates[order[1]]
            if abs(cost[i, order[1]] - cost[i, order[0]]) <= tol and abs(c1 - c2) > tol:
                raise MatchingAmbiguous(f"two oracle eigenvalues are equidistant from branch {i}")
    rows, cols = linear_sum_assignment(cost)
    out = [None] * len(predicted)
    for r, c in zip(rows, cols):
        out[r] = candidates[c]
    return out


def track_split(family: ProblemFamily, point: ParameterPoint, direction: ParameterDirection,
                eps_list, reference, n_nodes: int = DEFAULT_NODES, radius: float | None = None,
                match_tol: float = 1e-12) -> DriftRecord:
    """Follow the eigenvalues near ``lambda0`` along ``p0 + eps pdot`` and fit the drift.

    ``reference`` is a splitting result providing ``lambda1`` and ``exponent``.
    ``fitted_exponent`` is the log-log slope of the largest first-order
    residual; ``raw_exponent`` that of the largest raw drift.
    """
    eps = [float(e) for e in eps_list]
    if len(eps) < 3 or any(e <= 0 for e in eps) or any(a <= b for a, b in zip(eps, eps[1:])):
        raise ValueError("eps_list needs at least 3 strictly decreasing positive entries")
    direction.check(point)
    lam0 = complex(point.lambda0)
    lam1 = np.asarray(reference.lambda1, dtype=complex)
    expo = float(getattr(reference, "exponent", 1.0))
    if radius is None:
        reach = max(float(np.abs(lam1).max(initial=0.0)) * eps[0] ** expo, 0.0)
        radius = max(4.0 * reach, 1e-6 * max(1.0, abs(lam0)))
    window = Window.around(lam0, radius)
    tol = match_tol * max(1.0, abs(lam0))
    matched, preds, resid, drift = [], [], [], []
    for e in eps:
        p = point.p0 + e * direction.pdot
        cand = oracle_eigenvalues(family, p, window, n_nodes)
        pred = lam0 + lam1 * e**expo
        got = _match(cand, pred, lam0, tol)
        matched.append(got)
        preds.append(list(pred))
        resid.append([abs(g - q) for g, q in zip(got, pred)])
        drift.append([abs(g - lam0) for g in got])
    fexp, fcoef = _fit(eps, [max(r) for r in resid])
    rexp, rcoef = _fit(eps, [max(d) for d in drift])
    # phase of the residual of the worst branch at the smallest epsilon
    last = matched[-1]
    k = int(np.argmax(resid[-1]))
    phase = np.exp(1j * np.angle(last[k] - preds[-1][k])) if resid[-1][k] > 0 else 1.0
    angles = [float(np.angle(g - lam0)) for g in last]
    return DriftRecord(eps, matched, preds, resid, drift, fexp, complex(fcoef * phase), rexp, rcoef, angles)
