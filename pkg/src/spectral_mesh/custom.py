"""User-defined problems from a small JSON description.

Coefficients and boundary matrices are constant in x, polynomial in lambda
and affine in the parameters::

    {
      "order": 2, "size": 1,
      "parameters": ["theta"], "p0": [1.0],
      "coefficients": [                       # l_0 .. l_m
        [{"const": [[1]]}],                   # l_0 = 1
        [{"const": [[0]]}],                   # l_1 = 0
        [{"const": [[0]]}, {"const": [[-1]]}] # l_2 = -lambda
      ],
      "A": [{"const": [[1, 0], [0, 1]]}],
      "B": [{"const": [[0, 0], [0, 0]], "p": [[[0, 0], [-1, 0]]]}]
    }

Each list runs over powers of lambda; a term is ``const + sum_i p_i * p[i]``.
Complex entries are written as ``[re, im]`` pairs or strings like ``"1+2j"``.
"""
from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .bvp import ProblemFamily, make_problem
from .errors import DimensionMismatch


class SpecFileError(ValueError):
    pass


def _entry(v):
    if isinstance(v, str):
        try:
            return complex(v.replace(" ", ""))
        except ValueError as exc:
            raise SpecFileError(f"cannot read matrix entry {v!r}") from exc
    if isinstance(v, (list, tuple)) and len(v) == 2 and all(isinstance(t, (int, float)) for t in v):
        return complex(v[0], v[1])
    if isinstance(v, (int, float)):
        return complex(v)
    raise SpecFileError(f"cannot read matrix entry {v!r}")


def _matrix(rows, shape, where):
    try:
        M = np.array([[_entry(v) for v in row] for row in rows], dtype=complex)
    except TypeError as exc:
        raise SpecFileError(f"{where}: matrix must be a list of rows") from exc
    if M.shape != shape:
        raise SpecFileError(f"{where}: expected shape {shape}, got {M.shape}")
    return M


def _poly(terms, shape, n_par, where):
    """List over lambda powers of (const, [per-parameter matrices])."""
    if not isinstance(terms, list) or not terms:
        raise SpecFileError(f"{where}: expected a non-empty list of lambda-power terms")
    out = []
    for k, t in enumerate(terms):
        if not isinstance(t, dict):
            raise SpecFileError(f"{where}[{k}]: each term must be an object")
        const = _matrix(t.get("const", np.zeros(shape).tolist()), shape, f"{where}[{k}].const")
        pm = t.get("p", [])
        if len(pm) > n_par:
            raise SpecFileError(f"{where}[{k}].p: more parameter matrices than parameters")
        mats = [_matrix(M, shape, f"{where}[{k}].p[{i}]") for i, M in enumerate(pm)]
        mats += [np.zeros(shape, dtype=complex)] * (n_par - len(mats))
        out.append((const, mats))
    return out


def _eval(poly, lam, p):
    total = 0
    for k, (const, mats) in enumerate(poly):
        term = const.copy()
        for pi, M in zip(p, mats):
            term = term + pi * M
        total = total + lam**k * term
    return total


def family_from_dict(spec: dict) -> ProblemFamily:
    try:
        m, N = int(spec["order"]), int(spec["size"])
        names = list(spec.get("parameters", []))
        p0 = np.asarray(spec.get("p0", [0.0] * max(len(names), 1)), dtype=float)
        coeffs = spec["coefficients"]
        A_terms, B_terms = spec["A"], spec["B"]
    except KeyError as exc:
        raise SpecFileError(f"missing key {exc.args[0]!r}") from exc
    n_par = max(len(names), len(p0))
    if names and len(p0) != len(names):
        raise SpecFileError("p0 length does not match the parameter list")
    if len(coeffs) != m + 1:
        raise SpecFileError(f"need {m + 1} coefficient entries l_0..l_m, got {len(coeffs)}")
    L = [_poly(c, (N, N), n_par, f"coefficients[{j}]") for j, c in enumerate(coeffs)]
    A = _poly(A_terms, (m * N, m * N), n_par, "A")
    B = _poly(B_terms, (m * N, m * N), n_par, "B")
    degree = max(len(t) for t in L + [A, B]) - 1

    def coeff(x, lam, p, dx):
        out = np.zeros((m + 1, len(x), N, N), dtype=complex)
        if dx == 0:
            for j in range(m + 1):
                out[j] = _eval(L[j], lam, p)
        return out

    try:
        return make_problem(m, N, coeff, lambda lam, p: _eval(A, lam, p), lambda lam, p: _eval(B, lam, p),
                            "finite-difference", p_ref=p0, lambda_ref=0.0, lambda_degree=max(degree, 1),
                            name=str(spec.get("name", "custom")),
                            p_names=tuple(names) or tuple(f"p{i}" for i in range(n_par)))
    except DimensionMismatch as exc:
        raise SpecFileError(str(exc)) from exc


def load_spec_file(path) -> tuple[ProblemFamily, np.ndarray]:
    """Family and its reference parameter vector ``p0``."""
    try:
        spec = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SpecFileError(f"cannot read spec file {path}: {exc}") from exc
    fam = family_from_dict(spec)
    n_par = len(fam.p_names)
    return fam, np.asarray(spec.get("p0", [0.0] * n_par), dtype=float)
