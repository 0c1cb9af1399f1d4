"""Scalar problem with a double non-derogatory eigenvalue.

``u'' - lam u = 0`` on [0, 1] with ``u(0) = 0`` and ``u'(0) - theta u(1) = 0``,
``p = (theta,)``.  The characteristic function is

    Delta(lam, theta) = 1 - theta S(lam),   S(lam) = sinh(sqrt lam) / sqrt lam,

and double roots solve ``Delta = dDelta/dlam = 0``.  They are located by a
damped Newton iteration; the Keldysh chain and its adjoint are then
written in closed form.  At a double root ``lam* = s^2`` the chain is
``u0 = sinh(s x)/s``, ``u1 = x cosh(s x) / (2 s^2)``, and the adjoint chain
(``v(1) = 0``, ``v'(1) + conj(theta) v(0) = 0``) is the reflection
``v_j(x) = conj(u_j(1 - x))``.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import factorial

import numpy as np

from ..bvp import Eigenfunction, ParameterPoint, ProblemFamily, make_problem

P_NAMES = ("theta",)
_SERIES_TERMS = 80


def _coeff(x, lam, p, dx):
    out = np.zeros((3, len(x), 1, 1), dtype=complex)
    if dx == 0:
        out[0] = 1.0
        out[2] = -lam
    return out


def _bc_A(lam, p):
    return np.array([[1.0, 0.0], [0.0, 1.0]], dtype=complex)


def _bc_B(lam, p):
    return np.array([[0.0, 0.0], [-p[0], 0.0]], dtype=complex)


def branch_point_problem(theta: float = 1.0) -> ProblemFamily:
    return make_problem(2, 1, _coeff, _bc_A, _bc_B, "finite-difference",
                        p_ref=[theta], lambda_ref=-1.0, lambda_degree=1,
                        name="branch-point", p_names=P_NAMES)


def s_function(lam, order: int = 0) -> complex:
    """``d^order/dlam^order`` of ``S(lam) = sum lam^k / (2k+1)!`` (entire in lam)."""
    total = 0j
    for k in range(order, _SERIES_TERMS):
        total += factorial(k) / factorial(k - order) * lam ** (k - order) / factorial(2 * k + 1)
    return complex(total)


def characteristic(lam, theta) -> complex:
    return 1.0 - theta * s_function(lam)


def locate_double_root(lam_guess: complex = -20.25, theta_guess: complex | None = None,
                       tol: float = 1e-14, max_iter: int = 100) -> tuple[complex, complex]:
    """Damped Newton on ``(Delta, dDelta/dlam) = 0``; returns ``(lam*, theta*)``."""
    lam = complex(lam_guess)
    theta = complex(theta_guess) if theta_guess is not None else 1.0 / s_function(lam)

    def residual(z):
        lm, th = z
        return np.array([1.0 - th * s_function(lm), -th * s_function(lm, 1)])

    z = np.array([lam, theta])
    r = residual(z)
    for _ in range(max_iter):
        lm, th = z
        J = np.array([[-th * s_function(lm, 1), -s_function(lm)],
                      [-th * s_function(lm, 2), -s_function(lm, 1)]])
        step = np.linalg.solve(J, -r)
        t = 1.0
        while t > 1e-6:
            trial = z + t * step
            rt = residual(trial)
            if np.linalg.norm(rt) < (1 - 0.25 * t) * np.linalg.norm(r):
                break
            t *= 0.5
        z, r = trial, rt
        if np.linalg.norm(t * step) <= tol * (1 + np.linalg.norm(z)):
            break
    else:
        raise RuntimeError("Newton iteration did not converge")
    return complex(z[0]), complex(z[1])


def _chain_functions(s: complex, scale: complex):
    def u0(x, dx):
        x = np.asarray(x, dtype=float)
        ep, em = np.exp(s * x), np.exp(-s * x)
        val = (s**dx * ep - (-s) ** dx * em) / (2 * s)
        return (scale * val)[:, None]

    def cosh_d(x, k):
        return (s**k * np.exp(s * x) + (-s) ** k * np.exp(-s * x)) / 2

    def u1(x, dx):
        # d^k (x g) = x g^(k) + k g^(k-1) with g = cosh(s x)
        x = np.asarray(x, dtype=float)
        val = x * cosh_d(x, dx)
        if dx > 0:
            val = val + dx * cosh_d(x, dx - 1)
        return (scale * val / (2 * s * s))[:, None]

    return u0, u1


def _reflect(func):
    def g(x, dx):
        x = np.asarray(x, dtype=float)
        return np.conj((-1) ** dx * func(1.0 - x, dx))
    return g


@dataclass(frozen=True)
class BranchPointFixture:
    family: ProblemFamily
    point: ParameterPoint
    direct: tuple
    adjoint: tuple
    theta: complex

    @property
    def lambda0(self) -> complex:
        return self.point.lambda0


def branch_point_fixture(lam_guess: complex = -20.25) -> BranchPointFixture:
    """Double root nearest ``lam_guess`` with its normalized Keldysh chains."""
    lam, theta = locate_double_root(lam_guess)
    if abs(lam.imag) < 1e-12 * abs(lam) and abs(theta.imag) < 1e-12 * abs(theta):
        lam, theta = complex(lam.real), complex(theta.real)
    s = np.sqrt(lam)
    f0, _ = _chain_functions(s, 1.0)
    nrm = Eigenfunction(f0, 1).norm()
    u0, u1 = _chain_functions(s, 1.0 / nrm)
    direct = (Eigenfunction(u0, 1, "u0"), Eigenfunction(u1, 1, "u1"))
    adjoint = (Eigenfunction(_reflect(u0), 1, "v0"), Eigenfunction(_reflect(u1), 1, "v1"))
    if abs(theta.imag) > 0:
        raise ValueError("complex theta is outside the real parameter space of the fixture")
    family = branch_point_problem(theta.real)
    return BranchPointFixture(family, ParameterPoint(lam, [theta.real]), direct, adjoint, theta)


def simple_eigenpair(theta: float, lam_guess: complex = -10.0, tol: float = 1e-14,
                     max_iter: int = 100):
    """Simple eigenvalue near ``lam_guess`` at fixed ``theta`` with (u, v).

    Returns ``(point, u, v)``; ``v`` is the reflected adjoint eigenfunction.
    """
    lam = complex(lam_guess)
    for _ in range(max_iter):
        step = characteristic(lam, theta) / (-theta * s_function(lam, 1))
        lam -= step
        if abs(step) <= tol * (1 + abs(lam)):
            break
    else:
        raise RuntimeError("Newton iteration did not converge")
    if abs(lam.imag) < 1e-12 * abs(lam):
        lam = complex(lam.real)
    s = np.sqrt(lam)
    f0, _ = _chain_functions(s, 1.0)
    u0, _ = _chain_functions(s, 1.0 / Eigenfunction(f0, 1).norm())
    u = Eigenfunction(u0, 1, "u")
    v = Eigenfunction(_reflect(u0), 1, "v")
    return ParameterPoint(lam, [theta]), u, v
