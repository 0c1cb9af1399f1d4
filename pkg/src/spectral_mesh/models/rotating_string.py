"""Rotating circular string passing through a spring/damper eyelet.

The string equation ``lam^2 u + 2 Omega lam u_phi - (1 - Omega^2) u_phiphi = 0``
lives on ``phi in [0, 2 pi]``; the family maps it to ``x = phi / (2 pi)``.
Closed-form formulas (mesh, nodes, splitting, tongues) stay in the original
variables.  Parameter vector order: ``p = (Omega, k, d, mu)``.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from ..bvp import Eigenfunction, ParameterPoint, ProblemFamily, make_problem
from ..errors import SingularLeadingCoefficient

TWO_PI = 2.0 * np.pi
P_NAMES = ("Omega", "k", "d", "mu")


@dataclass(frozen=True)
class StringParams:
    Omega: float = 0.0
    k: float = 0.0
    d: float = 0.0
    mu_f: float = 0.0

    def as_vector(self) -> np.ndarray:
        return np.array([self.Omega, self.k, self.d, self.mu_f], dtype=float)


def _coeff(x, lam, p, dx):
    Om = p[0]
    out = np.zeros((3, len(x), 1, 1), dtype=complex)
    if dx == 0:
        out[0] = -(1.0 - Om**2) / TWO_PI**2
        out[1] = Om * lam / np.pi
        out[2] = lam**2
    return out


def _bc_A(lam, p):
    Om, k, d, mu = p
    s = 1.0 - Om**2
    return np.array([[1.0, 0.0],
                     [-TWO_PI * (lam * d + k) / s, 1.0 - mu / s]], dtype=complex)


def _bc_B(lam, p):
    return np.array([[-1.0, 0.0], [0.0, -1.0]], dtype=complex)


def string_problem(params: StringParams | None = None) -> ProblemFamily:
    """Family ``L(lam, p)`` on [0, 1]; ``params`` is the validation point."""
    params = params or StringParams()
    if abs(abs(params.Omega) - 1.0) < 1e-12:
        raise SingularLeadingCoefficient("|Omega| = 1: the leading coefficient 1 - Omega^2 vanishes")
    return make_problem(2, 1, _coeff, _bc_A, _bc_B, "finite-difference",
                        p_ref=params.as_vector(), lambda_ref=1j, lambda_degree=2,
                        name="string", p_names=P_NAMES)


def characteristic_function(lam, Omega):
    """Closed-form characteristic function of the unconstrained string (d = k = mu = 0)."""
    lam = np.asarray(lam, dtype=complex)
    return (8 * lam * np.sin(np.pi * lam / (1j * (1 - Omega))) * np.sin(np.pi * lam / (1j * (1 + Omega)))
            * np.exp(-2 * np.pi * lam * Omega / (Omega**2 - 1)) / (Omega**2 - 1))


def mesh_eigenvalue(n: int, eps: int, Omega):
    """Mesh line ``lambda_n^eps = i n (1 + eps Omega)``."""
    return 1j * n * (1 + eps * np.asarray(Omega))


def mode_function(n: int, eps: int) -> Eigenfunction:
    """``cos(n phi) - eps i sin(n phi) = exp(-i eps n phi)`` with ``phi = 2 pi x``."""
    s = -1j * eps * n * TWO_PI

    def func(x, dx):
        return (s**dx * np.exp(s * x))[:, None]

    return Eigenfunction(func, 1, f"u_{n}^{eps:+d}")


@dataclass(frozen=True)
class MeshNode:
    n: int
    eps: int
    m: int
    delta: int
    param: float
    eigenvalue: complex
    critical: bool = False
    eigenfunctions: tuple = field(default=(), compare=False, repr=False)
    adjoint_eigenfunctions: tuple = field(default=(), compare=False, repr=False)

    @property
    def indices(self):
        return (self.n, self.eps, self.m, self.delta)


def _line_key(n, eps):
    return (n, 1) if n == 0 else (n, eps)


def string_node(n: int, eps: int, m: int, delta: int) -> MeshNode:
    den = m * delta - n * eps
    if den == 0:
        raise ValueError("parallel mesh lines do not cross")
    Om = (n - m) / den
    lam = 1j * n * m * (delta - eps) / den
    u = (mode_function(n, eps), mode_function(m, delta))
    return MeshNode(n, eps, m, delta, Om, complex(lam), critical=abs(abs(Om) - 1.0) < 1e-12,
                    eigenfunctions=u, adjoint_eigenfunctions=u)


def string_mesh_nodes(n_range, m_range) -> list[MeshNode]:
    """All crossings of mesh lines ``(n, eps)`` and ``(m, delta)`` with indices in range.

    Nodes at the critical speed ``|Omega| = 1`` are kept and flagged.
    """
    seen, nodes = set(), []
    for n, m, eps, delta in product(n_range, m_range, (-1, 1), (-1, 1)):
        a, b = _line_key(n, eps), _line_key(m, delta)
        if a == b or m * delta == n * eps:
            continue
        key = frozenset((a, b))
        if key in seen:
            continue
        seen.add(key)
        nodes.append(string_node(n, eps, m, delta))
    return nodes


def node_point(node: MeshNode, k=0.0, d=0.0, mu=0.0) -> ParameterPoint:
    return ParameterPoint(node.eigenvalue, [node.param, k, d, mu])


# ---------------------------------------------------------------------------
# closed-form splitting
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StringSplit:
    center: complex
    radicand: complex
    roots: tuple

    node_eigenvalue: complex = 0j

    @property
    def increments(self) -> tuple:
        return tuple(r - self.node_eigenvalue for r in self.roots)


def string_split_node(node: MeshNode, dOmega=0.0, k=0.0, d=0.0, mu=0.0) -> StringSplit:
    """Two eigenvalues near a node for small ``(Omega - Omega_node, k, d, mu)``."""
    n, e, m, dl = node.n, node.eps, node.m, node.delta
    lam0 = node.eigenvalue
    dk = d * lam0 + k
    center = (lam0 + 1j * (e * n + dl * m) / 2 * dOmega + 1j * (n + m) / (8 * np.pi * n * m) * dk
              + (e + dl) / (8 * np.pi) * mu)
    c = ((1j * (e * n - dl * m) / 2 * dOmega + 1j * (m - n) / (8 * np.pi * m * n) * dk
          + (e - dl) / (8 * np.pi) * mu) ** 2
         - (dk - 1j * e * n * mu) * (dk - 1j * dl * m * mu) / (16 * np.pi**2 * n * m))
    root = np.sqrt(complex(c))
    return StringSplit(complex(center), complex(c), (complex(center + root), complex(center - root)),
                       complex(lam0))


def subcritical_k_split(node: MeshNode, dOmega, k) -> tuple[complex, complex]:
    """Spring-only splitting at a subcritical node (eps < 0 < delta, m > n > 0)."""
    n, m = node.n, node.m
    base = node.eigenvalue + 1j * (m - n) / 2 * dOmega + 1j * (n + m) / (8 * np.pi * n * m) * k
    root = 1j * np.sqrt(k**2 / (16 * np.pi**2 * n * m)
                        + ((m - n) / (8 * np.pi * m * n) * k - (m + n) / 2 * dOmega) ** 2)
    return complex(base + root), complex(base - root)


def supercritical_k_split(node: MeshNode, dOmega, k) -> tuple[complex, complex]:
    """Spring-only splitting at a supercritical node (eps < 0 < delta, n < 0 < m)."""
    an, m = abs(node.n), node.m
    base = node.eigenvalue + 1j * (m + an) / 2 * dOmega + 1j * (an - m) / (8 * np.pi * an * m) * k
    rad = k**2 / (16 * np.pi**2 * an * m) - ((an - m) / 2 * dOmega - (m + an) / (8 * np.pi * m * an) * k) ** 2
    root = np.sqrt(complex(rad))
    return complex(base + root), complex(base - root)


def tongue_boundary_k(n_abs: int, m: int, Omega):
    """Both lines ``k(Omega)`` bounding the supercritical flutter tongue."""
    Omega = np.asarray(Omega, dtype=float)
    shift = Omega - (n_abs + m) / (n_abs - m)
    out = []
    for sign in (1, -1):
        out.append(4 * np.pi * n_abs * m * (n_abs - m) / (np.sqrt(n_abs) + sign * np.sqrt(m)) ** 2 * shift)
    return out[0], out[1]


def in_supercritical_tongue(n_abs: int, m: int, Omega, k):
    """First-order flutter criterion: positive radicand of the supercritical splitting."""
    dOm = np.asarray(Omega) - (n_abs + m) / (n_abs - m)
    k = np.asarray(k)
    rad = k**2 / (16 * np.pi**2 * n_abs * m) - ((n_abs - m) / 2 * dOm - (m + n_abs) / (8 * np.pi * m * n_abs) * k) ** 2
    return rad > 0


def damper_circle_residual(n: int, Omega, lam, d):
    """``(Re lam + d/4pi)^2 + n^2 Omega^2 - d^2/16pi^2`` (zero on the circle)."""
    lam = np.asarray(lam)
    return (lam.real + d / (4 * np.pi)) ** 2 + n**2 * Omega**2 - d**2 / (16 * np.pi**2)


def damper_hyperbola_residual(n: int, Omega, lam, d):
    """``n^2 Omega^2 - (Im lam - n)^2 - d^2/16pi^2`` (zero on the hyperbola)."""
    lam = np.asarray(lam)
    return n**2 * Omega**2 - (lam.imag - n) ** 2 - d**2 / (16 * np.pi**2)


def damper_locus(n: int, Omega, d) -> tuple[complex, complex]:
    """Eigenvalues near the node ``(0, n)`` with damping only."""
    base = 1j * n - d / (4 * np.pi)
    root = np.sqrt(complex(d**2 / (16 * np.pi**2) - n**2 * Omega**2))
    return complex(base + root), complex(base - root)


def friction_branches(n: int, Omega, mu) -> tuple[np.ndarray, np.ndarray]:
    """Real and imaginary parts of the friction-perturbed eigenvalues at ``(0, n)``.

    Returns ``(re, im)`` arrays of the two branch values each; the inner
    sign of the displayed double-sign formulas is fixed by ``sign(n Omega)``.
    """
    a = n * Omega
    s = np.sqrt(4 * np.pi**2 * a**2 + mu**2)
    inner = np.pi * abs(a) * s
    im_dev = np.sqrt(2 * np.pi**2 * a**2 + inner) / (2 * np.pi)
    re_dev = np.sqrt(max(-2 * np.pi**2 * a**2 + inner, 0.0)) / (2 * np.pi)
    sgn = 1.0 if a * mu >= 0 else -1.0
    re = np.array([re_dev, -re_dev])
    im = n + np.array([im_dev, -im_dev]) * sgn
    return re, im
