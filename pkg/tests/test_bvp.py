import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spectral_mesh.bvp import (
    Eigenfunction,
    FDSettings,
    ParameterDirection,
    ParameterPoint,
    contour_derivatives,
    make_problem,
    scalar_product,
    taylor_data,
    trace_vector,
)
from spectral_mesh.errors import DerivativeUnavailable, DimensionMismatch, SingularLeadingCoefficient
from spectral_mesh.models import dynamo as dy
from spectral_mesh.models import rotating_string as rs


def sine(k, weights=(1.0,)):
    w = np.asarray(weights, dtype=complex)

    def f(x, dx):
        x = np.asarray(x, dtype=float)
        val = (k * np.pi) ** dx * np.sin(k * np.pi * x + dx * np.pi / 2)
        return val[:, None] * w[None, :]

    return Eigenfunction(f, len(w))


# --- construction -----------------------------------------------------------

def test_string_family_is_valid():
    fam = rs.string_problem(rs.StringParams(0.3))
    assert (fam.order_m, fam.size_N) == (2, 1)
    assert fam.boundary(1j, [0.3, 0, 0, 0]).shape == (2, 4)


def test_dynamo_family_is_valid():
    fam = dy.dynamo_problem(dy.DynamoParams(1.0, 0.5, 0.2), dy.profile_from_spec("cos:1"))
    assert (fam.order_m, fam.size_N) == (2, 2)
    assert fam.boundary(-1.0, [1.0, 0.2, 0.5]).shape == (4, 8)


@pytest.mark.parametrize("Omega", [1.0, -1.0])
def test_critical_speed_rejected(Omega):
    with pytest.raises(SingularLeadingCoefficient):
        rs.string_problem(rs.StringParams(Omega))


def test_singular_leading_coefficient_from_callback():
    def coeff(x, lam, p, dx):
        out = np.zeros((3, len(x), 1, 1), dtype=complex)
        if dx == 0:
            out[0] = x[:, None, None] - 0.5      # vanishes mid-interval
        return out
    with pytest.raises(SingularLeadingCoefficient):
        make_problem(2, 1, coeff, lambda l, p: np.eye(2), lambda l, p: np.zeros((2, 2)), p_ref=[0.0])


def test_wrong_coefficient_shape():
    def coeff(x, lam, p, dx):
        return np.ones((2, len(x), 1, 1))
    with pytest.raises(DimensionMismatch):
        make_problem(2, 1, coeff, lambda l, p: np.eye(2), lambda l, p: np.eye(2), p_ref=[0.0])


def test_wrong_boundary_shape():
    def coeff(x, lam, p, dx):
        return np.ones((3, len(x), 1, 1))
    with pytest.raises(DimensionMismatch):
        make_problem(2, 1, coeff, lambda l, p: np.eye(3), lambda l, p: np.eye(2), p_ref=[0.0])


def test_analytic_mode_needs_callbacks():
    with pytest.raises(DerivativeUnavailable):
        make_problem(2, 1, lambda x, l, p, dx: np.ones((3, len(x), 1, 1)), lambda l, p: np.eye(2),
                     lambda l, p: np.eye(2), "analytic-callback", p_ref=[0.0])


# --- traces and scalar products -------------------------------------------

def test_trace_of_sine():
    np.testing.assert_allclose(trace_vector(sine(1), 2, 1), [0, np.pi, 0, -np.pi], atol=1e-14)


def test_trace_of_zero():
    t = trace_vector(Eigenfunction.zero(2), 2, 2)
    assert t.shape == (8,) and not t.any()


def test_trace_of_dynamo_mode():
    u = dy.mode_function(1, 1)
    pi = np.pi
    np.testing.assert_allclose(trace_vector(u, 2, 2), [0, 0, pi, pi**2, 0, 0, -pi, -pi**2], atol=1e-13)


def test_scalar_product_examples():
    assert scalar_product(sine(1), sine(1)) == pytest.approx(0.5, abs=1e-14)
    assert abs(scalar_product(sine(1), sine(2))) < 1e-14
    u, v = sine(1, (1, np.pi)), sine(1, (1, -np.pi))
    assert scalar_product(u, v) == pytest.approx((1 - np.pi**2) / 2, rel=1e-13)


@given(st.lists(st.floats(-3, 3), min_size=12, max_size=12))
def test_scalar_product_hermitian(vals):
    a = np.array(vals[:6]) + 1j * np.array(vals[6:])
    u = Eigenfunction.from_polynomials([a])
    v = Eigenfunction.from_polynomials([a[::-1] * 1j + 0.5])
    lhs, rhs = scalar_product(u, v), np.conj(scalar_product(v, u))
    assert abs(lhs - rhs) <= 1e-13 * max(abs(lhs), 1e-300) + 1e-300


# --- Taylor data ------------------------------------------------------------

def test_string_lambda_derivative_block():
    node = rs.string_node(1, -1, 2, 1)
    fam = rs.string_problem(rs.StringParams(node.param))
    pt = rs.node_point(node)
    td = taylor_data(fam, pt, ParameterDirection([1, 0, 0, 0]))
    c = td.L_r0[1].coefficients(np.array([0.3]))[:, 0, 0, 0]
    # in x = phi / 2 pi the phi-derivative term 2 Omega0 d_phi becomes (Omega0 / pi) d_x
    np.testing.assert_allclose(c, [0, node.param / np.pi, 2 * node.eigenvalue], atol=1e-11)
    assert node.param == pytest.approx(-1 / 3) and node.eigenvalue == pytest.approx(4j / 3)


def test_string_boundary_depends_on_lambda():
    fam = rs.string_problem(rs.StringParams(0.2, 0.0, 0.7))
    td = taylor_data(fam, ParameterPoint(1j, [0.2, 0.0, 0.7, 0.0]), ParameterDirection([0, 0, 0, 0]))
    assert np.abs(td.U_r0[1]).max() > 0.1


def test_zero_direction():
    fam = rs.string_problem(rs.StringParams(0.2))
    td = taylor_data(fam, ParameterPoint(1j, [0.2, 0.1, 0.3, 0.0]), ParameterDirection(np.zeros(4)))
    assert not np.asarray(td.U_01).any()
    assert not td.L_01.coefficients(np.linspace(0, 1, 5)).any()


def test_dynamo_alpha_direction_leaves_boundary_fixed():
    fam = dy.dynamo_problem(dy.DynamoParams(2.0, 0.0, 0.4), dy.profile_from_spec("cos:1"))
    td = taylor_data(fam, ParameterPoint(-5.0, [2.0, 0.4, 0.0]), ParameterDirection([1.0, 0.0, 0.0]))
    assert np.abs(td.U_01).max() < 1e-12


def test_direction_length_mismatch():
    fam = rs.string_problem()
    with pytest.raises(DimensionMismatch):
        taylor_data(fam, ParameterPoint(1j, [0, 0, 0, 0]), ParameterDirection([1.0]))


def test_second_lambda_derivative_consistent():
    fam = rs.string_problem(rs.StringParams(0.3, 0.2, 0.4))
    p = [0.3, 0.2, 0.4, 0.1]
    x = np.array([0.1, 0.7])
    lam0 = 0.4 + 1.1j
    td0 = taylor_data(fam, ParameterPoint(lam0, p), ParameterDirection(np.zeros(4)), r_max=2)
    errs = []
    for h in (1e-2, 5e-3):
        td1 = taylor_data(fam, ParameterPoint(lam0 + h, p), ParameterDirection(np.zeros(4)))
        diff = td1.L_r0[1].coefficients(x) - td0.L_r0[1].coefficients(x) - h * td0.L_r0[2].coefficients(x)
        errs.append(np.abs(diff).max() + np.abs(td1.U_r0[1] - td0.U_r0[1] - h * td0.U_r0[2]).max())
    # the string is quadratic in lambda, so the remainder is round-off
    assert max(errs) < 1e-10


def test_contour_derivatives_of_exponential():
    d = contour_derivatives(np.exp, 0.3, 0.5, 4)
    np.testing.assert_allclose(d, [np.exp(0.3)] * 5, rtol=1e-12)


def test_fd_settings_used():
    fam = rs.string_problem()
    td = taylor_data(fam, ParameterPoint(1j, [0.1, 0, 0, 0]), ParameterDirection([1, 0, 0, 0]),
                     settings=FDSettings(lambda_radius=1e-3, p_radius=1e-4))
    c = td.L_01.coefficients(np.array([0.5]))[:, 0, 0, 0]
    np.testing.assert_allclose(c, [2 * 0.1 / (2 * np.pi) ** 2, 1j / np.pi, 0], atol=1e-12)
