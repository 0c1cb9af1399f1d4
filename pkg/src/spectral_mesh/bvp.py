"""Two-point boundary eigenvalue problems for matrix differential operators.

A problem family is the expression

    L(lam, p) u = sum_j l_j(x, lam, p) d^{m-j} u / dx^{m-j},    x in [0, 1]

together with boundary conditions ``[A, B] t(u) = 0`` where ``t(u)`` is the
trace vector ``(u(0), u'(0), ..., u^{(m-1)}(0), u(1), ..., u^{(m-1)}(1))``.

Coefficient callbacks have the signature ``coeff(x, lam, p, dx)`` and return
an array of shape ``(m + 1, len(x), N, N)`` holding the ``dx``-th
x-derivative of every ``l_j``.  Callbacks must be re-entrant; families are
shared between threads during parameter sweeps.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from math import comb, factorial
from typing import Callable, Sequence

import numpy as np
import scipy.linalg as sla

from .errors import DerivativeUnavailable, DimensionMismatch, SingularLeadingCoefficient

CoefficientCallback = Callable[[np.ndarray, complex, np.ndarray, int], np.ndarray]
BoundaryCallback = Callable[[complex, np.ndarray], np.ndarray]

DEFAULT_QUADRATURE_NODES = 64
_DET_CHECK_POINTS = 33


# ---------------------------------------------------------------------------
# quadrature and contour differentiation
# ---------------------------------------------------------------------------

_GAUSS_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def gauss_legendre(n: int = DEFAULT_QUADRATURE_NODES) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes and weights mapped to [0, 1]."""
    if n not in _GAUSS_CACHE:
        t, w = np.polynomial.legendre.leggauss(n)
        _GAUSS_CACHE[n] = (0.5 * (t + 1.0), 0.5 * w)
    return _GAUSS_CACHE[n]


def chebyshev_points(n: int) -> np.ndarray:
    """Chebyshev-Gauss-Lobatto points on [0, 1], ascending."""
    if n == 1:
        return np.array([0.5])
    return 0.5 * (1.0 - np.cos(np.pi * np.arange(n) / (n - 1)))


def contour_derivatives(f, z0, radius, r_max, n_points=32):
    """Derivatives ``f^{(r)}(z0)`` for ``r = 0..r_max`` of a holomorphic ``f``.

    Uses the trapezoidal rule on the Cauchy integral over a circle of the
    given radius.  The r = 0 term is evaluated directly so that it matches
    ``f(z0)`` bit for bit.
    """
    if n_points <= r_max:
        raise ValueError("n_points must exceed r_max")
    f0 = np.asarray(f(z0))
    out = [f0]
    if r_max == 0:
        return out
    w = np.exp(2j * np.pi * np.arange(n_points) / n_points)
    vals = np.stack([np.asarray(f(z0 + radius * wk)) for wk in w])
    taylor = np.fft.fft(vals, axis=0) / n_points
    for r in range(1, r_max + 1):
        out.append(factorial(r) * taylor[r] / radius**r)
    return out


# ---------------------------------------------------------------------------
# functions on [0, 1]
# ---------------------------------------------------------------------------

class Eigenfunction:
    """An N-vector valued function on [0, 1] with evaluable derivatives.

    ``func(x, dx)`` returns an array of shape ``(len(x), N)`` holding the
    ``dx``-th derivative.  Instances are immutable; arithmetic builds new
    callables.
    """

    def __init__(self, func: Callable[[np.ndarray, int], np.ndarray], size: int, label: str = ""):
        self._func = func
        self.size = int(size)
        self.label = label

    def __call__(self, x, dx: int = 0) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        vals = np.asarray(self._func(x, dx), dtype=complex)
        return vals.reshape(len(x), self.size)

    def trace(self, order_m: int) -> np.ndarray:
        return trace_vector(self, order_m, self.size)

    def __add__(self, other: "Eigenfunction") -> "Eigenfunction":
        if not isinstance(other, Eigenfunction):
            return NotImplemented
        if other.size != self.size:
            raise DimensionMismatch("cannot add functions of different block size")
        return Eigenfunction(lambda x, dx: self(x, dx) + other(x, dx), self.size)

    def __sub__(self, other: "Eigenfunction") -> "Eigenfunction":
        return self + (-1.0) * other

    def __mul__(self, c) -> "Eigenfunction":
        c = complex(c)
        return Eigenfunction(lambda x, dx: c * self(x, dx), self.size, self.label)

    __rmul__ = __mul__

    def norm(self, n_nodes: int = DEFAULT_QUADRATURE_NODES) -> float:
        return float(np.sqrt(abs(scalar_product(self, self, n_nodes))))

    def normalized(self, n_nodes: int = DEFAULT_QUADRATURE_NODES) -> "Eigenfunction":
        nrm = self.norm(n_nodes)
        if nrm == 0.0:
            raise ValueError("cannot normalize the zero function")
        return (1.0 / nrm) * self

    def chebyshev(self, degree: int = 128) -> list[np.polynomial.Chebyshev]:
        """Chebyshev interpolants (one per component) on [0, 1]."""
        out = []
        for c in range(self.size):
            out.append(np.polynomial.Chebyshev.interpolate(
                lambda x, c=c: self(x)[:, c], degree, domain=[0.0, 1.0]))
        return out

    @classmethod
    def zero(cls, size: int) -> "Eigenfunction":
        return cls(lambda x, dx: np.zeros((len(x), size), dtype=complex), size, "zero")

    @classmethod
    def from_polynomials(cls, coeffs) -> "Eigenfunction":
        """Vector polynomial; ``coeffs[c]`` lists power-basis coefficients of component c."""
        polys = [np.polynomial.Polynomial(np.asarray(c, dtype=complex)) for c in coeffs]

        def func(x, dx):
            return np.stack([p.deriv(dx)(x) if dx else p(x) for p in polys], axis=-1)

        return cls(func, len(polys), "polynomial")

    @classmethod
    def combination(cls, weights: Sequence[complex], fns: Sequence["Eigenfunction"]) -> "Eigenfunction":
        weights = [complex(w) for w in weights]
        fns = list(fns)
        size = fns[0].size

        def func(x, dx):
            out = np.zeros((len(x), size), dtype=complex)
            for w, f in zip(weights, fns):
                if w != 0:
                    out += w * f(x, dx)
            return out

        return cls(func, size)


def trace_vector(u: Eigenfunction, order_m: int, size_N: int) -> np.ndarray:
    """Stacked endpoint derivatives ``(u(0), ..., u^{(m-1)}(0), u(1), ..., u^{(m-1)}(1))``."""
    if u.size != size_N:
        raise DimensionMismatch(f"function has {u.size} components, expected {size_N}")
    ends = np.array([0.0, 1.0])
    blocks = [[u(ends, d)[e] for d in range(order_m)] for e in range(2)]
    return np.concatenate([np.concatenate(b) for b in blocks])


def scalar_product(u: Eigenfunction, v: Eigenfunction, n_nodes: int = DEFAULT_QUADRATURE_NODES) -> complex:
    """``<u, v> = int_0^1 v^* u dx`` (linear in u, conjugate-linear in v)."""
    x, w = gauss_legendre(n_nodes)
    return complex(np.einsum("k,kc,kc->", w, np.conj(v(x)), u(x)))


def l2_norm_of_values(vals: np.ndarray, n_nodes: int = DEFAULT_QUADRATURE_NODES) -> float:
    _, w = gauss_legendre(n_nodes)
    return float(np.sqrt(np.einsum("k,kc->", w, np.abs(vals) ** 2).real))


# ---------------------------------------------------------------------------
# differential expressions
# ---------------------------------------------------------------------------

class DifferentialExpression:
    """``sum_j c_j(x) d^{m-j}/dx^{m-j}`` with matrix coefficients.

    ``coeffs(x, dx)`` returns shape ``(m + 1, len(x), N, N)``.  Evaluations
    are memoized per ``(x, dx)`` because quadrature reuses one node set.
    """

    def __init__(self, order: int, size: int, coeffs: Callable[[np.ndarray, int], np.ndarray], label: str = ""):
        self.order = int(order)
        self.size = int(size)
        self._coeffs = coeffs
        self.label = label
        self._cache: dict[tuple[bytes, int], np.ndarray] = {}

    def coefficients(self, x, dx: int = 0) -> np.ndarray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        key = (x.tobytes(), dx)
        hit = self._cache.get(key)
        if hit is None:
            hit = np.asarray(self._coeffs(x, dx), dtype=complex)
            expected = (self.order + 1, len(x), self.size, self.size)
            if hit.shape != expected:
                hit = np.broadcast_to(hit, expected).copy()
            if len(self._cache) > 64:
                self._cache.clear()
            self._cache[key] = hit
        return hit

    def apply(self, u: Eigenfunction, x) -> np.ndarray:
        """Values of the expression applied to ``u`` at the points ``x``."""
        x = np.atleast_1d(np.asarray(x, dtype=float))
        c = self.coefficients(x)
        out = np.zeros((len(x), self.size), dtype=complex)
        for j in range(self.order + 1):
            out += np.einsum("kab,kb->ka", c[j], u(x, self.order - j))
        return out

    def applied(self, u: Eigenfunction) -> Eigenfunction:
        """``L u`` as a (derivative-free) function."""
        def func(x, dx):
            if dx:
                raise DerivativeUnavailable("derivatives of L u are not tracked")
            return self.apply(u, x)

        return Eigenfunction(func, self.size)

    def adjoint(self) -> "DifferentialExpression":
        """Formal adjoint ``sum_q (-1)^{m-q} d^{m-q}(c_q^* v)`` in standard form."""
        m = self.order

        def coeffs(x, dx):
            base = [self.coefficients(x, d) for d in range(m + dx + 1)]
            out = np.zeros((m + 1,) + base[0].shape[1:], dtype=complex)
            for t in range(m + 1):
                s = m - t
                for q in range(t + 1):
                    sign = (-1) ** (m - q)
                    w = comb(m - q, s)
                    out[t] += sign * w * np.conj(np.swapaxes(base[t - q + dx][q], -1, -2))
            return out

        return DifferentialExpression(m, self.size, coeffs, label=f"adjoint({self.label})")

    def is_constant(self, n_samples: int = 9, rtol: float = 1e-13) -> bool:
        x = np.linspace(0.0, 1.0, n_samples)
        c = self.coefficients(x)
        scale = max(np.abs(c).max(), 1.0)
        return bool(np.abs(c - c[:, :1]).max() <= rtol * scale)

    def scaled(self, factor: complex) -> "DifferentialExpression":
        factor = complex(factor)
        return DifferentialExpression(self.order, self.size,
                                      lambda x, dx: factor * self.coefficients(x, dx))


# ---------------------------------------------------------------------------
# problem family, parameter point/direction, Taylor data
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ParameterPoint:
    lambda0: complex
    p0: np.ndarray

    def __post_init__(self):
        p0 = np.atleast_1d(np.asarray(self.p0, dtype=float))
        if p0.ndim != 1 or p0.size < 1:
            raise DimensionMismatch("parameter vector must be 1-D with at least one entry")
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "lambda0", complex(self.lambda0))


@dataclass(frozen=True)
class ParameterDirection:
    pdot: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "pdot", np.atleast_1d(np.asarray(self.pdot, dtype=float)))

    def check(self, point: ParameterPoint) -> None:
        if self.pdot.shape != point.p0.shape:
            raise DimensionMismatch(
                f"direction has length {self.pdot.size}, parameter vector has {point.p0.size}")


@dataclass(frozen=True)
class ProblemFamily:
    """Validated problem family; build with :func:`make_problem`."""

    order_m: int
    size_N: int
    coeff: CoefficientCallback
    bc_A: BoundaryCallback
    bc_B: BoundaryCallback
    deriv_mode: str = "finite-difference"
    coeff_derivative: Callable | None = None
    bc_derivative: Callable | None = None
    lambda_degree: int | None = None
    p_analytic: bool = True
    name: str = ""
    p_names: tuple[str, ...] = ()

    def expression(self, lam, p) -> DifferentialExpression:
        lam = complex(lam)
        p = np.asarray(p)
        return DifferentialExpression(
            self.order_m, self.size_N, lambda x, dx: self.coeff(x, lam, p, dx), label="L")

    def boundary(self, lam, p) -> np.ndarray:
        """``U = [A, B]``, shape ``(mN, 2mN)``."""
        return np.hstack([np.asarray(self.bc_A(complex(lam), np.asarray(p)), dtype=complex),
                          np.asarray(self.bc_B(complex(lam), np.asarray(p)), dtype=complex)])

    @property
    def trace_length(self) -> int:
        return 2 * self.order_m * self.size_N


def make_problem(order_m, size_N, coeff, bc_A, bc_B, deriv_mode="finite-difference", *,
                 p_ref, lambda_ref=0.0, coeff_derivative=None, bc_derivative=None,
                 lambda_degree=None, p_analytic=True, name="", p_names=()) -> ProblemFamily:
    """Validate callbacks at a reference point and return a :class:`ProblemFamily`.

    ``det l_0`` is sampled on 33 Chebyshev points; the family is rejected when
    it falls below ``1e-12 * scale**N`` anywhere, ``scale`` being the largest
    sampled entry of ``l_0``.
    """
    m, N = int(order_m), int(size_N)
    if m < 1 or N < 1:
        raise DimensionMismatch("order and block size must be positive")
    if deriv_mode not in ("analytic-callback", "finite-difference"):
        raise ValueError(f"unknown deriv_mode {deriv_mode!r}")
    if deriv_mode == "analytic-callback" and (coeff_derivative is None or bc_derivative is None):
        raise DerivativeUnavailable("analytic-callback mode needs coeff_derivative and bc_derivative")
    p_ref = np.atleast_1d(np.asarray(p_ref, dtype=float))
    x = chebyshev_points(_DET_CHECK_POINTS)
    for dx in range(m + 1):
        c = np.asarray(coeff(x, complex(lambda_ref), p_ref, dx))
        if c.shape != (m + 1, len(x), N, N):
            raise DimensionMismatch(
                f"coefficient callback returned shape {c.shape} for dx={dx}, "
                f"expected {(m + 1, len(x), N, N)}")
        if dx == 0:
            l0 = c[0]
    for cb, label in ((bc_A, "A"), (bc_B, "B")):
        M = np.asarray(cb(complex(lambda_ref), p_ref))
        if M.shape != (m * N, m * N):
            raise DimensionMismatch(f"boundary matrix {label} has shape {M.shape}, expected {(m * N, m * N)}")
    scale = float(np.abs(l0).max())
    dets = np.abs(np.linalg.det(l0))
    if scale == 0.0 or not np.all(np.isfinite(dets)) or dets.min() < 1e-12 * scale**N:
        raise SingularLeadingCoefficient("leading coefficient l_0(x) is (numerically) singular")
    return ProblemFamily(m, N, coeff, bc_A, bc_B, deriv_mode, coeff_derivative, bc_derivative,
                         lambda_degree, p_analytic, name, tuple(p_names))


@dataclass
class FDSettings:
    """Step controls for derivative estimation in finite-difference mode."""

    lambda_radius: float = 1e-2     # relative to 1 + |lambda0|
    lambda_points: int = 32
    p_radius: float = 1e-3          # relative to 1 + |p0|, per unit |pdot|
    p_points: int = 16
    central_step: float = 1e-6      # relative to 1 + |p0|, used when p is not analytic


@dataclass(frozen=True)
class TaylorData:
    """Expansion blocks at ``(lambda0, p0)`` along ``pdot``.

    ``L_r0[r]`` and ``U_r0[r]`` are the r-th lambda-derivatives; ``L_01`` and
    ``U_01`` the directional parameter derivatives.
    """

    point: ParameterPoint
    direction: ParameterDirection
    L_r0: list
    L_01: DifferentialExpression
    U_r0: list
    U_01: np.ndarray

    @property
    def r_max(self) -> int:
        return len(self.L_r0) - 1


def _lambda_derivative_expression(family, point, r, settings):
    lam0, p0 = point.lambda0, point.p0
    rho = settings.lambda_radius * (1.0 + abs(lam0))
    m, N = family.order_m, family.size_N

    if family.deriv_mode == "analytic-callback":
        def coeffs(x, dx):
            return family.coeff_derivative(x, lam0, p0, dx, r, None)
    else:
        def coeffs(x, dx):
            return contour_derivatives(lambda z: family.coeff(x, z, p0, dx), lam0, rho, r,
                                       max(settings.lambda_points, r + 1))[r]

    return DifferentialExpression(m, N, coeffs, label=f"L_{r}0")


def _direction_derivative(f, p0, pdot, settings, analytic):
    """``d/de f(p0 + e * pdot)`` at e = 0."""
    speed = float(np.linalg.norm(pdot))
    if speed == 0.0:
        return np.zeros_like(np.asarray(f(p0), dtype=complex))
    if analytic:
        rho = settings.p_radius * (1.0 + float(np.linalg.norm(p0))) / speed
        return contour_derivatives(lambda e: f(p0 + e * pdot), 0.0, rho, 1, settings.p_points)[1]
    h = settings.central_step * (1.0 + float(np.linalg.norm(p0))) / speed
    return (np.asarray(f(p0 + h * pdot)) - np.asarray(f(p0 - h * pdot))) / (2 * h)


def taylor_data(family: ProblemFamily, point: ParameterPoint, direction: ParameterDirection,
                r_max: int = 1, settings: FDSettings | None = None) -> TaylorData:
    """Build the expansion blocks used by the perturbation formulas."""
    if r_max < 1:
        raise ValueError("r_max must be at least 1")
    direction.check(point)
    settings = settings or FDSettings()
    lam0, p0, pdot = point.lambda0, point.p0, direction.pdot
    m, N = family.order_m, family.size_N

    L_r0 = [family.expression(lam0, p0)]
    L_r0 += [_lambda_derivative_expression(family, point, r, settings) for r in range(1, r_max + 1)]

    if family.deriv_mode == "analytic-callback":
        def c01(x, dx):
            return family.coeff_derivative(x, lam0, p0, dx, 0, pdot)
        U_r0 = [family.boundary(lam0, p0)]
        U_r0 += [np.asarray(family.bc_derivative(lam0, p0, r, None), dtype=complex)
                 for r in range(1, r_max + 1)]
        U_01 = np.asarray(family.bc_derivative(lam0, p0, 0, pdot), dtype=complex)
    else:
        def c01(x, dx):
            return _direction_derivative(lambda p: family.coeff(x, lam0, p, dx), p0, pdot,
                                         settings, family.p_analytic)
        rho = settings.lambda_radius * (1.0 + abs(lam0))
        U_r0 = contour_derivatives(lambda z: family.boundary(z, p0), lam0, rho, r_max,
                                   max(settings.lambda_points, r_max + 1))
        U_01 = _direction_derivative(lambda p: family.boundary(lam0, p), p0, pdot, settings,
                                     family.p_analytic)
    L_01 = DifferentialExpression(m, N, c01, label="L_01")
    return TaylorData(point, direction, L_r0, L_01, [np.asarray(U) for U in U_r0], np.asarray(U_01))


# ---------------------------------------------------------------------------
# constant-coefficient utilities (closed-form eigenfunctions for any BC)
# ---------------------------------------------------------------------------

def first_order_matrix(expr: DifferentialExpression) -> np.ndarray:
    """Companion matrix ``A`` with ``y' = A y`` for ``y = (u, u', ..., u^{(m-1)})``.

    Only valid for x-independent coefficients (checked by the callers).
    """
    m, N = expr.order, expr.size
    c = expr.coefficients(np.array([0.5]))[:, 0]
    A = np.zeros((m * N, m * N), dtype=complex)
    for k in range(m - 1):
        A[k * N:(k + 1) * N, (k + 1) * N:(k + 2) * N] = np.eye(N)
    inv_l0 = np.linalg.inv(c[0])
    for j in range(1, m + 1):
        blk = m - j
        A[(m - 1) * N:, blk * N:(blk + 1) * N] = -inv_l0 @ c[j]
    return A


def _expm_function(A: np.ndarray, y0: np.ndarray, m: int, N: int) -> Callable:
    def func(x, dx):
        s = max(0, dx - (m - 1))
        d = dx - s
        As = np.linalg.matrix_power(A, s) if s else None
        out = np.empty((len(x), N), dtype=complex)
        for i, xi in enumerate(x):
            y = sla.expm(A * xi) @ y0
            if As is not None:
                y = As @ y
            out[i] = y[d * N:(d + 1) * N]
        return out
    return func


def fundamental_boundary_matrix(expr: DifferentialExpression, U: np.ndarray) -> np.ndarray:
    """``U @ [I; expm(A)]`` whose null space parameterizes the eigenfunctions."""
    A = first_order_matrix(expr)
    n = A.shape[0]
    return U @ np.vstack([np.eye(n), sla.expm(A)])


def characteristic_determinant(expr: DifferentialExpression, U: np.ndarray) -> complex:
    if not expr.is_constant():
        raise ValueError("characteristic_determinant needs x-independent coefficients")
    return complex(np.linalg.det(fundamental_boundary_matrix(expr, U)))


def constant_coefficient_modes(expr: DifferentialExpression, U: np.ndarray,
                               rtol: float = 1e-9) -> list[Eigenfunction]:
    """Solutions of ``expr u = 0``, ``U t(u) = 0`` for x-independent coefficients.

    Returns an orthonormal (in initial data) basis of the kernel, which is
    empty when the spectral parameter is not an eigenvalue.
    """
    if not expr.is_constant():
        raise ValueError("constant_coefficient_modes needs x-independent coefficients")
    m, N = expr.order, expr.size
    A = first_order_matrix(expr)
    M = U @ np.vstack([np.eye(m * N), sla.expm(A)])
    _, s, vh = np.linalg.svd(M)
    scale = max(s[0], 1.0)
    modes = []
    for k in range(m * N):
        if s[k] <= rtol * scale:
            y0 = vh[k].conj()
            modes.append(Eigenfunction(_expm_function(A, y0, m, N), N, "mode").normalized())
    return modes
