"""Adjoint boundary eigenvalue problems via the bilinear concomitant.

Integration by parts gives ``<L u, v> - <u, L^+ v> = t(v)^* Lc t(u)`` with
the concomitant ``Lc = diag(-C(0), C(1))``.  Completing the boundary matrix
``U`` to an invertible square matrix ``W = [U; U~]`` and solving
``[-V~; V]^* = Lc W^{-1}`` produces the adjoint boundary matrix ``V`` and
its auxiliary block ``V~`` with ``Lc = V^* U~ - V~^* U``.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np
import scipy.linalg as sla

from .bvp import (
    DifferentialExpression,
    Eigenfunction,
    ParameterPoint,
    ProblemFamily,
    contour_derivatives,
    gauss_legendre,
    trace_vector,
)
from .errors import (
    DimensionMismatch,
    NumericallySingularU,
    RankDeficientBoundary,
    SingularCompletion,
)

RANK_TOL = 1e-10
COND_LIMIT = 1e8


def binomial_weight(k: int, i: int, j: int, m: int) -> int:
    """Weight ``k! / ((k-i)! i!)`` of the concomitant sum; zero off the anti-triangle."""
    if min(k, i, j, m) < 0:
        raise ValueError("indices must be non-negative")
    if i + j > m - 1 or k < i:
        return 0
    return factorial(k) // (factorial(k - i) * factorial(i))


@dataclass(frozen=True)
class ConcomitantMatrix:
    L_block: np.ndarray          # (2mN, 2mN) = diag(-C(0), C(1))
    l_ij_blocks: np.ndarray      # (2, m, m, N, N): blocks at x=0 and x=1
    order_m: int
    size_N: int

    def frak(self, end: int) -> np.ndarray:
        """The ``mN x mN`` matrix C(x) at ``x = end`` (0 or 1)."""
        m, N = self.order_m, self.size_N
        return self.l_ij_blocks[end].transpose(0, 2, 1, 3).reshape(m * N, m * N)


def _concomitant_blocks(expr: DifferentialExpression) -> np.ndarray:
    m, N = expr.order, expr.size
    ends = np.array([0.0, 1.0])
    derivs = [expr.coefficients(ends, d) for d in range(m)]   # derivs[d][q, end]
    blocks = np.zeros((2, m, m, N, N), dtype=complex)
    for i in range(m):
        for j in range(m - i):
            for k in range(i, m - j):
                w = binomial_weight(k, i, j, m)
                q = m - 1 - j - k
                blocks[:, i, j] += (-1) ** k * w * derivs[k - i][q]
    return blocks


def concomitant_from_expression(expr: DifferentialExpression) -> ConcomitantMatrix:
    m, N = expr.order, expr.size
    blocks = _concomitant_blocks(expr)
    n = m * N
    L = np.zeros((2 * n, 2 * n), dtype=complex)
    frak = [blocks[e].transpose(0, 2, 1, 3).reshape(n, n) for e in range(2)]
    L[:n, :n] = -frak[0]
    L[n:, n:] = frak[1]
    return ConcomitantMatrix(L, blocks, m, N)


def concomitant(family: ProblemFamily, point: ParameterPoint) -> ConcomitantMatrix:
    """Concomitant matrix of ``L(lambda0, p0)``."""
    return concomitant_from_expression(family.expression(point.lambda0, point.p0))


@dataclass(frozen=True)
class CompletedBoundary:
    U: np.ndarray
    U_tilde: np.ndarray
    cond: float

    @property
    def square(self) -> np.ndarray:
        return np.vstack([self.U, self.U_tilde])


def complete_boundary(U, strategy="orthonormal", cond_limit: float = COND_LIMIT) -> CompletedBoundary:
    """Extend ``U`` (mN x 2mN) to an invertible square matrix.

    ``strategy`` is ``"orthonormal"`` (rows spanning the orthogonal complement
    of the row space of U) or an explicit ``U_tilde`` array to validate.
    """
    U = np.asarray(U, dtype=complex)
    rows, cols = U.shape
    if cols != 2 * rows:
        raise DimensionMismatch(f"boundary matrix must be mN x 2mN, got {U.shape}")
    s = np.linalg.svd(U, compute_uv=False)
    if s[0] == 0.0 or s[-1] < RANK_TOL * s[0]:
        raise RankDeficientBoundary(f"boundary matrix has rank < {rows} (sigma_min/sigma_max = {s[-1] / max(s[0], 1e-300):.2e})")
    if isinstance(strategy, str):
        if strategy != "orthonormal":
            raise ValueError(f"unknown completion strategy {strategy!r}")
        _, _, vh = np.linalg.svd(U)
        U_tilde = vh[rows:]
    else:
        U_tilde = np.asarray(strategy, dtype=complex)
        if U_tilde.shape != U.shape:
            raise DimensionMismatch(f"auxiliary matrix has shape {U_tilde.shape}, expected {U.shape}")
    cond = float(np.linalg.cond(np.vstack([U, U_tilde])))
    if not np.isfinite(cond) or cond > cond_limit:
        raise SingularCompletion(f"completed boundary matrix is singular (cond = {cond:.3e})")
    return CompletedBoundary(U, U_tilde, cond)


@dataclass(frozen=True)
class AdjointRealization:
    adjoint_coeff: DifferentialExpression
    V: np.ndarray
    V_tilde: np.ndarray
    source: CompletedBoundary
    concomitant: ConcomitantMatrix

    def reconstruction_error(self) -> float:
        """Relative error of ``Lc = V^* U~ - V~^* U``."""
        Lc = self.concomitant.L_block
        rec = self.V.conj().T @ self.source.U_tilde - self.V_tilde.conj().T @ self.source.U
        return float(np.abs(rec - Lc).max() / max(np.abs(Lc).max(), 1e-300))

    def row_space_projector(self) -> np.ndarray:
        """Orthogonal projector onto the row space of ``V`` (completion independent)."""
        q, _ = np.linalg.qr(self.V.conj().T)
        return q @ q.conj().T


def _boundary_blocks(Lc: np.ndarray, W: np.ndarray, cond: float, cond_limit: float):
    if not np.isfinite(cond) or cond > cond_limit:
        raise NumericallySingularU(f"cond(W) = {cond:.3e}")
    n = W.shape[0] // 2
    # X = Lc W^{-1};  W^* X^* = Lc^*
    Xs = sla.solve(W.conj().T, Lc.conj().T)
    return Xs[n:], -Xs[:n]


def adjoint_boundary(conc: ConcomitantMatrix, completed: CompletedBoundary,
                     cond_limit: float = COND_LIMIT) -> tuple[np.ndarray, np.ndarray]:
    """Adjoint boundary matrix ``V`` and auxiliary ``V~`` from ``[-V~; V]^* = Lc W^{-1}``."""
    return _boundary_blocks(conc.L_block, completed.square, completed.cond, cond_limit)


def adjoint_expression(family: ProblemFamily, point: ParameterPoint) -> DifferentialExpression:
    """Formal adjoint ``sum_q (-1)^{m-q} d^{m-q}(l_q^* v)`` expanded by the Leibniz rule."""
    return family.expression(point.lambda0, point.p0).adjoint()


def adjoint_realization(family: ProblemFamily, point: ParameterPoint, completion="orthonormal",
                        cond_limit: float = COND_LIMIT) -> AdjointRealization:
    """Adjoint expression plus adjoint boundary blocks at ``(lambda0, p0)``.

    ``completion`` may be ``"orthonormal"``, an explicit ``U~`` array, or a
    callable ``(lam, p) -> U~``.
    """
    expr = family.expression(point.lambda0, point.p0)
    U = family.boundary(point.lambda0, point.p0)
    if callable(completion):
        completion = completion(point.lambda0, point.p0)
    completed = complete_boundary(U, completion, cond_limit)
    conc = concomitant_from_expression(expr)
    V, V_tilde = adjoint_boundary(conc, completed, cond_limit)
    return AdjointRealization(expr.adjoint(), V, V_tilde, completed, conc)


def adjoint_boundary_lambda_derivatives(family: ProblemFamily, point: ParameterPoint,
                                        U_tilde: np.ndarray, r_max: int,
                                        radius: float | None = None, n_points: int = 32):
    """``d^r/d(conj lambda)`` of ``V`` and ``V~`` for ``r = 0..r_max``.

    ``V`` is the conjugate of a function holomorphic in lambda (with ``U~``
    held fixed), so its conj-lambda derivatives are conjugates of ordinary
    derivatives of ``X(lambda) = Lc(lambda) W(lambda)^{-1}``.
    """
    p0 = point.p0
    n = U_tilde.shape[0]
    radius = radius or 1e-2 * (1.0 + abs(point.lambda0))

    def X(lam):
        Lc = concomitant_from_expression(family.expression(lam, p0)).L_block
        W = np.vstack([family.boundary(lam, p0), U_tilde])
        return sla.solve(W.T, Lc.T).T

    out = []
    for Xr in contour_derivatives(X, point.lambda0, radius, r_max, max(n_points, r_max + 1)):
        Xs = Xr.conj().T
        out.append((Xs[n:], -Xs[:n]))
    return out


def lagrange_residual(family: ProblemFamily, point: ParameterPoint, adjoint_real: AdjointRealization,
                      u: Eigenfunction, v: Eigenfunction, n_nodes: int = 64,
                      relative: bool = False) -> float:
    """``|<L u, v> - <u, L^+ v> - t(v)^* Lc t(u)|``; vanishes for every pair.

    With ``relative=True`` the residual is divided by the sum of the
    magnitudes of the three terms (or returned as is when they all vanish).
    """
    x, w = gauss_legendre(n_nodes)
    expr = family.expression(point.lambda0, point.p0)
    Lu = expr.apply(u, x)
    Ladj_v = adjoint_real.adjoint_coeff.apply(v, x)
    lhs = np.einsum("k,kc,kc->", w, np.conj(v(x)), Lu)
    rhs = np.einsum("k,kc,kc->", w, np.conj(Ladj_v), u(x))
    m, N = family.order_m, family.size_N
    tu, tv = trace_vector(u, m, N), trace_vector(v, m, N)
    bnd = tv.conj() @ adjoint_real.concomitant.L_block @ tu
    res = abs(lhs - rhs - bnd)
    if relative:
        scale = abs(lhs) + abs(rhs) + abs(bnd)
        return float(res / scale) if scale > 0 else float(res)
    return float(res)
