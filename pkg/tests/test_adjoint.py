import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spectral_mesh.adjoint import (
    adjoint_boundary,
    adjoint_realization,
    binomial_weight,
    complete_boundary,
    concomitant,
    concomitant_from_expression,
    lagrange_residual,
)
from spectral_mesh.bvp import Eigenfunction, ParameterPoint, make_problem, scalar_product, trace_vector
from spectral_mesh.errors import RankDeficientBoundary, SingularCompletion
from spectral_mesh.models import dynamo as dy
from spectral_mesh.models import rotating_string as rs


def constant_scalar(c, b, a, A=np.eye(2), B=np.zeros((2, 2))):
    def coeff(x, lam, p, dx):
        out = np.zeros((3, len(x), 1, 1), dtype=complex)
        if dx == 0:
            out[0], out[1], out[2] = c, b, a
        return out
    return make_problem(2, 1, coeff, lambda l, p: A, lambda l, p: B, p_ref=[0.0])


def poly(coeffs):
    return Eigenfunction.from_polynomials(np.atleast_2d(coeffs))


@pytest.mark.parametrize("args, expected", [((1, 0, 0, 2), 1), ((0, 1, 0, 2), 0), ((2, 1, 0, 3), 2),
                                            ((3, 2, 1, 3), 0)])
def test_binomial_weight(args, expected):
    assert binomial_weight(*args) == expected


def test_constant_second_order_concomitant():
    c, b = 2.0, 0.7
    fam = constant_scalar(c, b, -1.3)
    conc = concomitant(fam, ParameterPoint(0.0, [0.0]))
    # boundary form c u' conj(v) - c u conj(v') + b u conj(v), rows indexed by v-derivatives
    expected = np.array([[b, c], [-c, 0]])
    np.testing.assert_allclose(conc.frak(0), expected, atol=1e-14)
    np.testing.assert_allclose(conc.frak(1), expected, atol=1e-14)
    np.testing.assert_allclose(conc.L_block[:2, :2], -expected, atol=1e-14)


def test_anti_triangle_blocks_vanish():
    fam = dy.dynamo_problem(dy.DynamoParams(1.0, 0.3, 0.5))
    blocks = concomitant(fam, ParameterPoint(2.0, [1.0, 0.5, 0.3])).l_ij_blocks
    m = 2
    for i in range(m):
        for j in range(m):
            if i + j > m - 1:
                assert not blocks[:, i, j].any()


def test_adjoint_expression_constant():
    fam = constant_scalar(2.0, 0.7, -1.3)
    adj = fam.expression(0.0, [0.0]).adjoint()
    np.testing.assert_allclose(adj.coefficients(np.array([0.2]))[:, 0, 0, 0], [2.0, -0.7, -1.3], atol=1e-14)


def test_self_adjoint_sturm_liouville():
    def coeff(x, lam, p, dx):
        out = np.zeros((3, len(x), 1, 1), dtype=complex)
        q = np.cos(3 * x + dx * np.pi / 2) * 3.0**dx
        out[2, :, 0, 0] = q
        if dx == 0:
            out[0] = 1.0
        return out
    fam = make_problem(2, 1, coeff, lambda l, p: np.eye(2), lambda l, p: np.zeros((2, 2)), p_ref=[0.0])
    expr = fam.expression(0.0, [0.0])
    x = np.linspace(0, 1, 7)
    np.testing.assert_allclose(expr.adjoint().coefficients(x), expr.coefficients(x), atol=1e-14)


def test_dynamo_adjoint_expression():
    # l1 = d/dx l0 makes the expanded adjoint l0^* v'' + l1^* v' + l2^* v
    fam = dy.dynamo_problem(dy.DynamoParams(1.5, 0.0, 0.8))
    expr = fam.expression(1 + 2j, [1.5, 0.0, 0.8])
    x = np.linspace(0, 1, 9)
    c = expr.coefficients(x)
    herm = np.conj(np.swapaxes(c, -1, -2))
    np.testing.assert_allclose(expr.adjoint().coefficients(x), herm, atol=1e-12)


def test_dirichlet_completion():
    U = np.hstack([np.eye(2), np.zeros((2, 2))])
    comp = complete_boundary(U)
    assert comp.cond == pytest.approx(1.0)
    np.testing.assert_allclose(np.abs(comp.U_tilde[:, :2]), 0, atol=1e-14)


def test_repeated_row_is_rank_deficient():
    U = np.array([[1.0, 0, 1, 0], [1.0, 0, 1, 0]])
    with pytest.raises(RankDeficientBoundary):
        complete_boundary(U)


def test_dynamo_auxiliary_completion():
    fam = dy.dynamo_problem(dy.DynamoParams(0.0, 0.0, 0.0))
    comp = complete_boundary(fam.boundary(0.0, [0, 0, 0]), dy.auxiliary_completion())
    assert abs(np.linalg.det(comp.square)) > 0.5


def test_singular_user_completion():
    U = np.hstack([np.eye(2), np.zeros((2, 2))])
    with pytest.raises(SingularCompletion):
        complete_boundary(U, U.copy())


def test_periodic_first_order():
    def coeff(x, lam, p, dx):
        out = np.zeros((2, len(x), 1, 1), dtype=complex)
        if dx == 0:
            out[0] = 1.0
        return out
    fam = make_problem(1, 1, coeff, lambda l, p: np.array([[1.0]]), lambda l, p: np.array([[-1.0]]),
                       p_ref=[0.0])
    ar = adjoint_realization(fam, ParameterPoint(0.0, [0.0]))
    V = ar.V[0]
    # v(0) = v(1) up to scaling
    assert abs(V[0] + V[1]) < 1e-14 and abs(V[0]) > 0.1


def test_reconstruction_string_and_dynamo(rng):
    for _ in range(5):
        p = [rng.uniform(-0.9, 0.9), rng.normal(), rng.normal(), rng.normal()]
        ar = adjoint_realization(rs.string_problem(rs.StringParams(p[0])), ParameterPoint(rng.normal() * 1j, p))
        assert ar.reconstruction_error() < 1e-12
        q = [rng.normal() * 5, rng.uniform(0, 1), rng.normal()]
        ar = adjoint_realization(dy.dynamo_problem(dy.DynamoParams(q[0], q[2], q[1])), ParameterPoint(rng.normal(), q),
                                 completion=dy.auxiliary_completion)
        assert ar.reconstruction_error() < 1e-12


def test_adjoint_boundary_independent_of_completion(rng):
    fam = rs.string_problem(rs.StringParams(0.3))
    pt = ParameterPoint(0.5 + 2j, [0.3, 0.4, 0.2, 0.1])
    a = adjoint_realization(fam, pt)
    U = fam.boundary(pt.lambda0, pt.p0)
    other = a.source.U_tilde + rng.normal(size=(2, 2)) @ U
    b = adjoint_realization(fam, pt, completion=other)
    np.testing.assert_allclose(a.row_space_projector(), b.row_space_projector(), atol=1e-12)


def test_adjoint_boundary_direct_call():
    fam = rs.string_problem()
    pt = ParameterPoint(1j, [0.0, 1.0, 0.0, 0.0])
    comp = complete_boundary(fam.boundary(pt.lambda0, pt.p0))
    V, Vt = adjoint_boundary(concomitant(fam, pt), comp)
    ar = adjoint_realization(fam, pt)
    np.testing.assert_allclose(V, ar.V, atol=1e-14)
    np.testing.assert_allclose(Vt, ar.V_tilde, atol=1e-14)


coeff_lists = st.lists(st.complex_numbers(max_magnitude=5, allow_nan=False, allow_infinity=False),
                       min_size=7, max_size=7)


@given(coeff_lists, coeff_lists, st.floats(-0.9, 0.9), st.floats(-2, 2), st.floats(-2, 2))
def test_lagrange_identity_string(cu, cv, Om, k, d):
    fam = rs.string_problem(rs.StringParams(Om))
    pt = ParameterPoint(0.3 + 1.7j, [Om, k, d, 0.2])
    ar = adjoint_realization(fam, pt)
    assert lagrange_residual(fam, pt, ar, poly(cu), poly(cv), relative=True) < 1e-10


@given(st.lists(coeff_lists, min_size=2, max_size=2), st.lists(coeff_lists, min_size=2, max_size=2),
       st.floats(-10, 10), st.floats(0, 1), st.floats(-3, 3))
def test_lagrange_identity_dynamo(cu, cv, a0, b, g):
    fam = dy.dynamo_problem(dy.DynamoParams(a0, g, b), dy.profile_from_spec("cos:2"))
    pt = ParameterPoint(-3.0 + 1j, [a0, b, g])
    ar = adjoint_realization(fam, pt)
    assert lagrange_residual(fam, pt, ar, poly(cu), poly(cv), relative=True) < 1e-10


def test_lagrange_zero_pair():
    fam = rs.string_problem()
    pt = ParameterPoint(1j, [0, 0, 0, 0])
    z = Eigenfunction.zero(1)
    assert lagrange_residual(fam, pt, adjoint_realization(fam, pt), z, z) == 0.0


def test_dynamo_eigenpairs_in_domains():
    node = dy.dynamo_node(1, 1, 2, 1)
    fam = dy.dynamo_problem(dy.DynamoParams(node.param))
    pt = dy.node_point(node)
    ar = adjoint_realization(fam, pt)
    expr = fam.expression(pt.lambda0, pt.p0)
    U = fam.boundary(pt.lambda0, pt.p0)
    for u, v in zip(node.eigenfunctions, node.adjoint_eigenfunctions):
        assert np.linalg.norm(U @ trace_vector(u, 2, 2)) < 1e-12
        assert np.linalg.norm(ar.V @ trace_vector(v, 2, 2)) < 1e-12
        # u in the domain, v in the adjoint domain: the boundary term drops
        lhs = scalar_product(expr.applied(u), v)
        rhs = scalar_product(u, ar.adjoint_coeff.applied(v))
        assert abs(lhs - rhs) < 1e-10 * max(1.0, abs(lhs))


def test_string_domain_pairs_symmetric():
    node = rs.string_node(1, -1, 2, 1)
    fam = rs.string_problem(rs.StringParams(node.param))
    pt = rs.node_point(node)
    ar = adjoint_realization(fam, pt)
    for v in node.adjoint_eigenfunctions:
        assert np.linalg.norm(ar.V @ trace_vector(v, 2, 1)) < 1e-12


def test_concomitant_from_expression_matches_family():
    fam = rs.string_problem(rs.StringParams(0.2))
    pt = ParameterPoint(2j, [0.2, 0, 0, 0])
    a = concomitant(fam, pt).L_block
    b = concomitant_from_expression(fam.expression(2j, [0.2, 0, 0, 0])).L_block
    np.testing.assert_array_equal(a, b)
