"""Spherically symmetric MHD alpha^2-dynamo (l = 0 modes).

The alpha-profile is ``alpha(x) = alpha0 + gamma * profile(x)`` with a
zero-mean profile; ``beta`` interpolates between idealistic (0) and
physically realistic (1) boundary conditions.  Parameter vector order:
``p = (alpha0, beta, gamma)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product
from typing import Callable

import numpy as np

from ..bvp import Eigenfunction, ParameterPoint, ProblemFamily, gauss_legendre, make_problem
from ..errors import ZeroMeanViolated
from .rotating_string import MeshNode

P_NAMES = ("alpha0", "beta", "gamma")

# auxiliary rows completing [A, B] to an invertible 8 x 8 matrix
A_TILDE = np.block([[np.zeros((2, 2)), np.eye(2)], [np.zeros((2, 2)), np.zeros((2, 2))]]).astype(complex)
B_TILDE = np.block([[np.zeros((2, 2)), np.zeros((2, 2))], [np.zeros((2, 2)), np.eye(2)]]).astype(complex)
U_TILDE = np.hstack([A_TILDE, B_TILDE])


class Profile:
    """Zero-mean perturbation ``Delta alpha(x)`` with x-derivatives.

    ``func(x, dx)`` returns the ``dx``-th derivative.
    """

    def __init__(self, func: Callable[[np.ndarray, int], np.ndarray], label: str = "custom",
                 check_mean: bool = True):
        self._func = func
        self.label = label
        if check_mean:
            x, w = gauss_legendre(128)
            vals = np.asarray(func(x, 0), dtype=float)
            mean = float(w @ vals)
            if abs(mean) > 1e-10 * max(1.0, float(np.abs(vals).max())):
                raise ZeroMeanViolated(f"profile mean is {mean:.3e}, expected 0")

    def __call__(self, x, dx: int = 0):
        return self._func(np.asarray(x, dtype=float), dx)

    def selection_integral(self, j: int, n_nodes: int = 64) -> float:
        """``int_0^1 profile(x) cos(j pi x) dx`` by Gauss-Legendre quadrature."""
        x, w = gauss_legendre(n_nodes)
        return float(w @ (np.asarray(self(x), dtype=float) * np.cos(j * np.pi * x)))


class CosineProfile(Profile):
    """``cos(2 pi k x)``."""

    def __init__(self, k: int):
        if k < 1:
            raise ValueError("cosine profile index must be >= 1")
        self.k = int(k)
        w = 2 * np.pi * self.k

        def func(x, dx):
            # d^dx/dx^dx cos(w x) = w^dx cos(w x + dx pi / 2)
            return w**dx * np.cos(w * x + dx * np.pi / 2)

        super().__init__(func, f"cos:{self.k}", check_mean=False)

    def exact_selection_integral(self, j: int) -> float:
        """Closed form: 1/2 if ``2k = +-j`` else 0."""
        return 0.5 if 2 * self.k == abs(j) else 0.0


def profile_from_spec(spec: str) -> Profile:
    """``"cos:k"`` or ``"coshalf:j"`` (``cos(j pi x)``, j >= 1)."""
    kind, _, arg = spec.partition(":")
    if kind == "cos":
        return CosineProfile(int(arg))
    if kind == "coshalf":
        j = int(arg)
        w = j * np.pi
        return Profile(lambda x, dx: w**dx * np.cos(w * x + dx * np.pi / 2), f"coshalf:{j}")
    raise ValueError(f"unknown profile spec {spec!r}")


@dataclass(frozen=True)
class DynamoParams:
    alpha0: float = 0.0
    gamma: float = 0.0
    beta: float = 0.0
    l: int = 0
    profile: Profile | None = field(default=None, compare=False)

    def as_vector(self) -> np.ndarray:
        return np.array([self.alpha0, self.beta, self.gamma], dtype=float)


def dynamo_problem(params: DynamoParams | None = None, profile: Profile | None = None) -> ProblemFamily:
    """Family ``l0 u'' + l1 u' + l2 u`` with ``l1 = d/dx l0`` and the beta boundary row."""
    params = params or DynamoParams()
    if params.l != 0:
        raise NotImplementedError("only l = 0 modes are supported")
    if not 0.0 <= params.beta <= 1.0:
        raise ValueError("beta must lie in [0, 1]")
    prof = profile or params.profile or CosineProfile(1)

    def coeff(x, lam, p, dx):
        a0, _, g = p[0], p[1], p[2]
        alpha = g * np.asarray(prof(x, dx), dtype=complex)
        if dx == 0:
            alpha = alpha + a0
        dalpha = g * np.asarray(prof(x, dx + 1), dtype=complex)
        K = len(x)
        out = np.zeros((3, K, 2, 2), dtype=complex)
        out[0, :, 1, 0] = -alpha
        out[1, :, 1, 0] = -dalpha
        out[2, :, 0, 1] = alpha
        if dx == 0:
            out[0, :, 0, 0] = 1.0
            out[0, :, 1, 1] = 1.0
            out[2, :, 0, 0] = -lam
            out[2, :, 1, 1] = -lam
        return out

    def bc_A(lam, p):
        A = np.zeros((4, 4), dtype=complex)
        A[0, 0] = A[1, 1] = 1.0
        return A

    def bc_B(lam, p):
        b = p[1]
        B = np.zeros((4, 4), dtype=complex)
        B[2, 0] = 1.0 - b          # beta * l + 1 - beta with l = 0
        B[2, 2] = b
        B[3, 1] = 1.0
        return B

    fam = make_problem(2, 2, coeff, bc_A, bc_B, "finite-difference",
                       p_ref=params.as_vector(), lambda_ref=0.0, lambda_degree=1,
                       name="dynamo", p_names=P_NAMES)
    object.__setattr__(fam, "profile", prof)
    return fam


def auxiliary_completion(lam=None, p=None) -> np.ndarray:
    """The fixed auxiliary block ``[A~, B~]``."""
    return U_TILDE.copy()


def mesh_eigenvalue(n: int, eps: int, alpha0):
    return -(np.pi * n) ** 2 + eps * np.asarray(alpha0) * np.pi * n


def mode_function(n: int, eps: int) -> Eigenfunction:
    """``(1, eps pi n) sin(n pi x)``."""
    w = n * np.pi
    vec = np.array([1.0, eps * np.pi * n])

    def func(x, dx):
        return (w**dx * np.sin(w * x + dx * np.pi / 2))[:, None] * vec

    return Eigenfunction(func, 2, f"u_{n}^{eps:+d}")


def adjoint_mode_function(n: int, eps: int) -> Eigenfunction:
    """Component swap of the direct mode: ``conj(v_2) = u_1``, ``conj(v_1) = u_2``."""
    w = n * np.pi
    vec = np.array([eps * np.pi * n, 1.0])

    def func(x, dx):
        return (w**dx * np.sin(w * x + dx * np.pi / 2))[:, None] * vec

    return Eigenfunction(func, 2, f"v_{n}^{eps:+d}")


def dynamo_node(n: int, eps: int, m: int, delta: int) -> MeshNode:
    if n == m and eps == delta:
        raise ValueError("identical mesh lines do not form a node")
    lam = eps * delta * np.pi**2 * n * m
    a0 = eps * np.pi * n + delta * np.pi * m
    return MeshNode(n, eps, m, delta, float(a0), complex(lam),
                    eigenfunctions=(mode_function(n, eps), mode_function(m, delta)),
                    adjoint_eigenfunctions=(adjoint_mode_function(n, eps), adjoint_mode_function(m, delta)))


def dynamo_nodes(n_range, m_range) -> list[MeshNode]:
    """Crossings of the lines ``(n, eps)`` and ``(m, delta)``, deduplicated."""
    seen, nodes = set(), []
    for n, m, eps, delta in product(n_range, m_range, (-1, 1), (-1, 1)):
        if n < 1 or m < 1 or (n == m and eps == delta):
            continue
        key = frozenset(((n, eps), (m, delta)))
        if key in seen:
            continue
        seen.add(key)
        nodes.append(dynamo_node(n, eps, m, delta))
    return nodes


def node_point(node: MeshNode, beta=0.0, gamma=0.0) -> ParameterPoint:
    return ParameterPoint(node.eigenvalue, [node.param, beta, gamma])


# ---------------------------------------------------------------------------
# closed-form splitting and instability regions
# ---------------------------------------------------------------------------

def selection_integral(profile: Profile, node: MeshNode, exact: bool = True) -> float:
    j = node.eps * node.n - node.delta * node.m
    if exact and isinstance(profile, CosineProfile):
        return profile.exact_selection_integral(j)
    return profile.selection_integral(j)


def radicand(node: MeshNode, d_alpha0, beta, gamma, dalpha):
    """Radicand of the two-root splitting (negative means complex eigenvalues).

    ``d_alpha0 = alpha0 - alpha0_node`` (the sign only matters for the center);
    ``dalpha`` is the selection integral.
    """
    n, e, m, dl = node.n, node.eps, node.m, node.delta
    s = (-1.0) ** (n + m)
    return (((dl * m - e * n) * d_alpha0) ** 2
            + 4 * m * n * (e * gamma * dalpha - s * np.pi * n * beta) * (dl * gamma * dalpha - s * np.pi * m * beta))


def cone_radicand(node: MeshNode, d_alpha0, beta, gamma, dalpha):
    """Same radicand written as the difference of squares defining the cone."""
    n, e, m, dl = node.n, node.eps, node.m, node.delta
    s = (-1.0) ** (n + m)
    lhs = ((e * n - dl * m) * d_alpha0) ** 2 + m * n * ((e + dl) * gamma * dalpha - s * (n + m) * beta * np.pi) ** 2
    rhs = m * n * ((e - dl) * gamma * dalpha - s * (n - m) * beta * np.pi) ** 2
    return lhs - rhs


def oscillatory_center(node: MeshNode, d_alpha0, beta):
    """Real part of the complex pair inside the cone."""
    n, e, m, dl = node.n, node.eps, node.m, node.delta
    return (node.eigenvalue.real - e * dl * np.pi**2 * m * n * beta
            + np.pi / 2 * (dl * m + e * n) * d_alpha0)


@dataclass(frozen=True)
class DynamoSplit:
    center: complex
    radicand: complex
    roots: tuple
    dalpha: float

    node_eigenvalue: complex = 0j

    @property
    def increments(self):
        return tuple(r - self.node_eigenvalue for r in self.roots)

    @property
    def in_cone(self) -> bool:
        return self.radicand.real < 0

    @property
    def oscillatory(self) -> bool:
        return self.in_cone and self.center.real > 0


def dynamo_split_node(node: MeshNode, d_alpha0=0.0, beta=0.0, gamma=0.0,
                      profile: Profile | None = None, dalpha: float | None = None) -> DynamoSplit:
    """First-order eigenvalues near a node for small ``(d_alpha0, beta, gamma)``."""
    if dalpha is None:
        dalpha = selection_integral(profile, node) if profile is not None else 0.0
    n, m = node.n, node.m
    center = oscillatory_center(node, d_alpha0, beta)
    rad = radicand(node, d_alpha0, beta, gamma, dalpha)
    root = np.pi / 2 * np.sqrt(complex(rad))
    return DynamoSplit(complex(center), complex(rad), (complex(center + root), complex(center - root)),
                       float(dalpha), node.eigenvalue)


@dataclass
class Tongue:
    """A region of complex eigenvalues in the ``(alpha0, gamma)`` plane at fixed beta."""

    region_id: int
    kind: str                 # "cone" (beta = 0), "hyperbolic" or "ellipse"
    node: MeshNode
    beta: float
    dalpha: float = 0.5

    def radicand(self, alpha0, gamma):
        return cone_radicand(self.node, np.asarray(alpha0) - self.node.param, self.beta,
                             np.asarray(gamma), self.dalpha)

    def inside(self, alpha0, gamma):
        return self.radicand(alpha0, gamma) < 0

    def oscillatory(self, alpha0, gamma):
        re = oscillatory_center(self.node, np.asarray(alpha0) - self.node.param, self.beta)
        return self.inside(alpha0, gamma) & (re > 0)

    def gamma_offset(self) -> float:
        """Smallest ``gamma >= 0`` on the boundary at ``alpha0 = alpha0_node``."""
        roots = self._gamma_roots(0.0)
        pos = [g for g in roots if g >= -1e-14]
        return float(min(pos)) if pos else float("nan")

    def _gamma_roots(self, d_alpha0) -> list[float]:
        # radicand is quadratic in gamma: a g^2 + b g + c
        g = np.array([0.0, 1.0, -1.0])
        vals = cone_radicand(self.node, d_alpha0, self.beta, g, self.dalpha)
        c = vals[0]
        a = (vals[1] + vals[2]) / 2 - c
        b = (vals[1] - vals[2]) / 2
        if abs(a) < 1e-14:
            return [-c / b] if abs(b) > 1e-14 else []
        disc = b * b - 4 * a * c
        if disc < 0:
            return []
        r = np.sqrt(disc)
        return sorted([(-b - r) / (2 * a), (-b + r) / (2 * a)])

    def boundary(self, gammas) -> np.ndarray:
        """Boundary points ``(alpha0, gamma)`` solving radicand = 0 for each gamma."""
        gammas = np.asarray(gammas, dtype=float)
        n, e, m, dl = self.node.n, self.node.eps, self.node.m, self.node.delta
        c1 = (e * n - dl * m) ** 2
        rest = self.radicand(self.node.param, gammas)           # radicand at d_alpha0 = 0
        ok = rest <= 0
        da = np.sqrt(-rest[ok] / c1)
        g = gammas[ok]
        a_node = self.node.param
        pts = np.concatenate([np.column_stack([a_node - da, g]), np.column_stack([a_node + da[::-1], g[::-1]])])
        return pts

    def ellipse_geometry(self):
        """``(alpha_center, gamma_center, alpha_semi_axis, gamma_semi_axis)`` for elliptic regions."""
        if self.kind != "ellipse":
            raise ValueError("only elliptic regions have ellipse geometry")
        roots = self._gamma_roots(0.0)
        if len(roots) != 2:
            return (self.node.param, 0.0, 0.0, 0.0)
        gc = 0.5 * (roots[0] + roots[1])
        gh = 0.5 * (roots[1] - roots[0])
        n, e, m, dl = self.node.n, self.node.eps, self.node.m, self.node.delta
        # at gamma = gc: c1 da^2 = -radicand(da = 0)
        rest = float(self.radicand(self.node.param, gc))
        ah = np.sqrt(max(-rest, 0.0) / (e * n - dl * m) ** 2)
        return (self.node.param, gc, float(ah), gh)


def dynamo_tongues(k: int, beta: float = 0.0, n_max: int | None = None,
                   include_ellipses: bool = True) -> list[Tongue]:
    """Resonance regions for the profile ``cos(2 pi k x)`` at fixed beta.

    For beta = 0 these are the ``2k - 1`` cones of nodes with negative node
    eigenvalue.  For beta > 0 those become hyperbolic tongues and nodes with
    positive node eigenvalue add elliptic regions (``n = 1..n_max``).
    """
    n_max = n_max or 2 * k
    regions: list[Tongue] = []
    rid = 0
    # negative node eigenvalue: eps = 1, delta = -1, n + m = 2k
    for n in range(1, 2 * k):
        node = dynamo_node(n, 1, 2 * k - n, -1)
        regions.append(Tongue(rid, "cone" if beta == 0 else "hyperbolic", node, beta))
        rid += 1
    if beta != 0 and include_ellipses:
        for n in range(1, n_max + 1):
            for sign in (1, -1):
                node = dynamo_node(n, sign, n + 2 * k, sign)
                regions.append(Tongue(rid, "ellipse", node, beta))
                rid += 1
    return regions


def beta0_tongue_inside(k: int, n: int, alpha0, gamma):
    """Cone cross-section at beta = 0: ``d^2 < gamma^2/4 (1 - ((n - k)/k)^2)`` about ``2 pi (n - k)``."""
    d = 2 * np.pi * (n - k) - np.asarray(alpha0)
    return d**2 < np.asarray(gamma) ** 2 / 4 * (1 - ((n - k) / k) ** 2)


def k2_beta0_tongues(alpha0, gamma):
    """The three k = 2 resonant tongues at beta = 0 as displayed inequalities."""
    a, g = np.asarray(alpha0), np.asarray(gamma)
    return [16 * (a + 2 * np.pi) ** 2 < 3 * g**2, 4 * a**2 < g**2, 16 * (a - 2 * np.pi) ** 2 < 3 * g**2]


def k2_principal_tongues(alpha0, gamma, beta):
    """Deformed k = 2 principal tongues for beta != 0 as displayed inequalities."""
    a, g = np.asarray(alpha0), np.asarray(gamma)
    b = beta
    return [16 * (a + 2 * np.pi) ** 2 + (g + 10 * np.pi * b) ** 2 < 4 * (g + 4 * np.pi * b) ** 2,
            g**2 - 4 * a**2 > 16 * np.pi**2 * b**2,
            16 * (a - 2 * np.pi) ** 2 + (g - 10 * np.pi * b) ** 2 < 4 * (g - 4 * np.pi * b) ** 2]


def hyperbolic_tongue_inside(k: int, n: int, alpha0, gamma, beta, sign: int = 1):
    """Deformed tongue of the node pair ``(n, 2k - n)`` in displayed form."""
    m = 2 * k - n
    a0n = 2 * np.pi * (n - k) * sign
    a, g = np.asarray(alpha0), np.asarray(gamma)
    lhs = 4 * k**2 * (a - a0n) ** 2 + ((n - m) * g / 2 - sign * np.pi * (n**2 + m**2) * beta) ** 2
    return lhs < k**2 * (g - sign * 2 * np.pi * (n - m) * beta) ** 2


def ellipse_inside(k: int, n: int, alpha0, gamma, beta, sign: int = 1):
    """Elliptic oscillatory-dynamo region of the node ``(n, n + 2k)``."""
    a0n = 2 * np.pi * (n + k) * sign
    a, g = np.asarray(alpha0), np.asarray(gamma)
    q = n * (2 * k + n)
    return 4 * k**2 * (a - a0n) ** 2 + q * (g - sign * 2 * (n + k) * np.pi * beta) ** 2 < q * 4 * k**2 * np.pi**2 * beta**2


def corridor_lines(k: int, beta: float, alpha0):
    """Lines ``2 gamma = k beta (alpha0 +- 4 pi)`` bounding the ellipses."""
    a = np.asarray(alpha0)
    return k * beta * (a + 4 * np.pi) / 2, k * beta * (a - 4 * np.pi) / 2


def hyperbolic_gamma_offset(k: int, n: int, beta: float, positive: bool) -> float:
    """Displayed distance of a deformed tongue from the alpha0 axis.

    ``n`` runs over ``k..2k-1``; ``positive`` selects the tongue with positive
    node value of alpha0.
    """
    return 2 * np.pi * (n if positive else 2 * k - n) * beta
