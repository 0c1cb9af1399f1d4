import numpy as np
import pytest

from spectral_mesh.bvp import ParameterDirection, ParameterPoint, make_problem
from spectral_mesh.errors import MatchingAmbiguous, NonPolynomialLambda, SingularPencil
from spectral_mesh.models import dynamo as dy
from spectral_mesh.models import rotating_string as rs
from spectral_mesh.oracle import Window, chebyshev_matrix, collocate, oracle_eigenvalues, spectrum, track_split
from spectral_mesh.perturbation import SplittingResult
from spectral_mesh.verification import EPS_LIST, pencil_split, string_fixture


def distinct(values, tol=1e-6):
    out = []
    for z in sorted(values, key=lambda z: (z.imag, z.real)):
        if not out or abs(z - out[-1]) > tol:
            out.append(z)
    return np.array(out)


@pytest.mark.parametrize("alpha", [None, 0.8])
def test_differentiation_matrix(alpha):
    x, D = chebyshev_matrix(48, alpha)
    f = np.sin(2 * x) * np.exp(x)
    df = 2 * np.cos(2 * x) * np.exp(x) + f
    np.testing.assert_allclose(D @ f, df, atol=1e-9)
    assert x[0] == pytest.approx(0.0) and x[-1] == pytest.approx(1.0)


def test_bad_map_parameter():
    with pytest.raises(ValueError):
        chebyshev_matrix(10, 1.5)


def test_window():
    w = Window.around(1 + 1j, 0.5)
    assert w.contains(1.2 + 0.7j) and not w.contains(2 + 1j)
    assert Window(1, 0, 0, 1).empty and not w.empty


def test_string_spectrum_at_rest():
    ev = oracle_eigenvalues(rs.string_problem(), [0, 0, 0, 0], Window(-np.inf, np.inf, -10, 10))
    assert max(abs(z.real) for z in ev) < 1e-8
    nz = [z for z in distinct(ev) if abs(z) > 0.5]
    assert len(nz) == 20
    np.testing.assert_allclose(np.sort([z.imag for z in nz]), [n for n in range(-10, 11) if n], atol=1e-8)


def test_empty_window():
    assert oracle_eigenvalues(rs.string_problem(), [0, 0, 0, 0], Window(1, 0, 0, 1)) == []
    assert spectrum(collocate(rs.string_problem(), [0, 0, 0, 0]), Window(5, 6, 0.1, 0.2)) == []


def test_dynamo_mesh_is_real():
    a0 = 1.0
    fam = dy.dynamo_problem(dy.DynamoParams(a0))
    ev = oracle_eigenvalues(fam, [a0, 0, 0], Window(-250, 50, -50, 50))
    assert max(abs(z.imag) for z in ev) < 1e-8
    exact = [dy.mesh_eigenvalue(n, e, a0) for n in range(1, 5) for e in (-1, 1)]
    for lam in exact:
        assert min(abs(np.array(ev) - lam)) < 1e-7


def test_dynamo_double_eigenvalue_at_node():
    node = dy.dynamo_node(1, 1, 2, 1)
    assert node.param == pytest.approx(3 * np.pi) and node.eigenvalue == pytest.approx(2 * np.pi**2)
    fam = dy.dynamo_problem(dy.DynamoParams(node.param))
    ev = oracle_eigenvalues(fam, [node.param, 0, 0], Window.around(node.eigenvalue, 1.0))
    assert len(ev) == 2
    assert max(abs(z - 2 * np.pi**2) for z in ev) < 1e-7


@pytest.mark.parametrize("case", ["string", "dynamo"])
def test_convergence_in_nodes(case):
    if case == "string":
        p = [0.4, 0.3, 0.1, 0.2]
        fam, win = rs.string_problem(rs.StringParams(0.4)), Window(-5, 5, -4, 4)
    else:
        p = [2.0, 0.3, 0.5]
        fam, win = dy.dynamo_problem(dy.DynamoParams(2.0, 0.5, 0.3)), Window(-60, 20, -20, 20)
    coarse = np.array(oracle_eigenvalues(fam, p, win, n_nodes=48))
    fine = np.array(oracle_eigenvalues(fam, p, win, n_nodes=96))
    assert len(coarse) >= 3
    for z in coarse:
        if win.contains(z) and abs(z.imag - win.im_max) > 1e-3 and abs(z.imag - win.im_min) > 1e-3:
            assert np.abs(fine - z).min() < 1e-9


def test_non_polynomial_lambda():
    def coeff(x, lam, p, dx):
        out = np.zeros((3, len(x), 1, 1), dtype=complex)
        if dx == 0:
            out[0] = 1.0
            out[2] = np.exp(lam)
        return out
    fam = make_problem(2, 1, coeff, lambda l, p: np.eye(2), lambda l, p: np.zeros((2, 2)), p_ref=[0.0],
                       lambda_degree=2)
    with pytest.raises(NonPolynomialLambda):
        collocate(fam, [0.0])


def test_singular_pencil():
    def coeff(x, lam, p, dx):
        out = np.zeros((3, len(x), 1, 1), dtype=complex)
        if dx == 0:
            out[0] = 1.0
            out[2] = -lam
        return out
    fam = make_problem(2, 1, coeff, lambda l, p: np.zeros((2, 2)), lambda l, p: np.zeros((2, 2)),
                       p_ref=[0.0], lambda_degree=1)
    with pytest.raises(SingularPencil):
        oracle_eigenvalues(fam, [0.0], n_nodes=16)


@pytest.fixture(scope="module")
def node_data():
    return string_fixture()


def test_zero_direction_drift(node_data):
    _, fam, pt, group = node_data
    d = ParameterDirection(np.zeros(4))
    rec = track_split(fam, pt, d, EPS_LIST, pencil_split(group, d.pdot), radius=1e-3)
    assert max(max(v) for v in rec.drifts) < 1e-10


def test_spring_direction_second_order(node_data):
    _, fam, pt, group = node_data
    d = [0, 1.0, 0, 0]
    rec = track_split(fam, pt, ParameterDirection(d), EPS_LIST, pencil_split(group, d))
    assert 1.8 <= rec.fitted_exponent <= 2.2
    assert 0.9 <= rec.raw_exponent <= 1.1


def test_too_many_branches_is_ambiguous():
    Om = 0.3
    fam = rs.string_problem(rs.StringParams(Om))
    pt = ParameterPoint(1.3j, [Om, 0, 0, 0])
    ref = SplittingResult([1j, 1j + 1e-3, 1j - 1e-3], "semisimple")
    with pytest.raises(MatchingAmbiguous):
        track_split(fam, pt, ParameterDirection([1.0, 0, 0, 0]), EPS_LIST, ref)


def test_eps_list_validated(node_data):
    _, fam, pt, group = node_data
    ref = pencil_split(group, [0, 1.0, 0, 0])
    with pytest.raises(ValueError):
        track_split(fam, pt, ParameterDirection([0, 1.0, 0, 0]), [1e-3, 1e-3, 1e-4], ref)

