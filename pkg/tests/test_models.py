import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from spectral_mesh.errors import SingularLeadingCoefficient, ZeroMeanViolated
from spectral_mesh.models import dynamo as dy
from spectral_mesh.models import rotating_string as rs
from spectral_mesh.oracle import Window, oracle_eigenvalues
from spectral_mesh.verification import dynamo_fixture, pencil_split, string_fixture

PI = np.pi


def pairwise_close(a, b, tol):
    a, b = np.asarray(a), np.asarray(b)
    return min(np.abs(a - b).max(), np.abs(a - b[::-1]).max()) < tol


# --- rotating string ---------------------------------------------------------

def test_subcritical_node():
    node = rs.string_node(1, -1, 2, 1)
    assert node.param == pytest.approx(-1 / 3) and node.eigenvalue == pytest.approx(4j / 3)
    assert not node.critical
    assert abs(rs.characteristic_function(node.eigenvalue, node.param)) < 1e-12


def test_supercritical_node():
    node = rs.string_node(-1, -1, 2, 1)
    assert node.param == pytest.approx(-3.0) and node.eigenvalue == pytest.approx(-4j)


def test_critical_node_flagged():
    node = rs.string_node(1, 1, 2, 1)
    assert node.critical and abs(node.param) == pytest.approx(1.0)
    with pytest.raises(SingularLeadingCoefficient):
        rs.string_problem(rs.StringParams(node.param))


def test_parallel_lines_excluded():
    with pytest.raises(ValueError):
        rs.string_node(2, 1, 2, 1)


def test_node_table_consistent():
    nodes = rs.string_mesh_nodes(range(-4, 5), range(-4, 5))
    assert nodes
    for nd in nodes:
        if nd.critical:
            continue
        for n, e in ((nd.n, nd.eps), (nd.m, nd.delta)):
            assert abs(rs.mesh_eigenvalue(n, e, nd.param) - nd.eigenvalue) < 1e-12


@given(st.integers(-6, 6), st.sampled_from([-1, 1]), st.integers(-6, 6), st.sampled_from([-1, 1]))
def test_node_swap_symmetry(n, e, m, d):
    if m * d == n * e:
        return
    a, b = rs.string_node(n, e, m, d), rs.string_node(m, d, n, e)
    assert a.param == pytest.approx(b.param) and a.eigenvalue == pytest.approx(b.eigenvalue)


def test_mesh_at_rest_matches_oracle():
    ev = np.array(oracle_eigenvalues(rs.string_problem(), [0, 0, 0, 0], Window(-1, 1, -5.5, 5.5)))
    for n in range(1, 6):
        for s in (1, -1):
            assert np.abs(ev - s * 1j * n).min() < 1e-8


@given(st.floats(-0.02, 0.02), st.floats(-0.05, 0.05))
def test_subcritical_spring_form(dOm, k):
    node = rs.string_node(1, -1, 2, 1)
    general = rs.string_split_node(node, dOmega=dOm, k=k).roots
    assert pairwise_close(rs.subcritical_k_split(node, dOm, k), general, 1e-12)


@given(st.floats(-0.02, 0.02), st.floats(-0.05, 0.05))
def test_supercritical_spring_form(dOm, k):
    node = rs.string_node(-1, -1, 2, 1)
    general = rs.string_split_node(node, dOmega=dOm, k=k).roots
    assert pairwise_close(rs.supercritical_k_split(node, dOm, k), general, 1e-12)


def test_tongue_boundary_is_radicand_zero():
    node = rs.string_node(-1, -1, 2, 1)
    for Om in np.linspace(-3.2, -2.8, 9):
        for k in rs.tongue_boundary_k(1, 2, Om):
            rad = rs.string_split_node(node, dOmega=Om - node.param, k=k).radicand
            assert abs(rad) < 1e-12


def test_flutter_inside_tongue():
    assert rs.in_supercritical_tongue(1, 2, -3.01, 0.1)
    assert not rs.in_supercritical_tongue(1, 2, -2.99, 0.1)


@pytest.mark.parametrize("Om, d", [(0.01, 0.5), (0.03, 0.2), (-0.02, 0.1)])
def test_damper_locus(Om, d):
    n = 2
    node = rs.string_node(n, 1, n, -1)
    locus = rs.damper_locus(n, Om, d)
    assert pairwise_close(locus, rs.string_split_node(node, dOmega=Om, d=d).roots, 1e-12)
    for lam in locus:
        if d**2 / (16 * PI**2) > n**2 * Om**2:
            assert abs(rs.damper_circle_residual(n, Om, lam, d)) < 1e-12
        else:
            assert abs(rs.damper_hyperbola_residual(n, Om, lam, d)) < 1e-12


@pytest.mark.parametrize("Om, mu", [(0.01, 0.3), (-0.02, 0.1), (0.05, -0.2)])
def test_friction_branches(Om, mu):
    n = 2
    node = rs.string_node(n, 1, n, -1)
    re, im = rs.friction_branches(n, Om, mu)
    assert pairwise_close(re + 1j * im, rs.string_split_node(node, dOmega=Om, mu=mu).roots, 1e-12)


def test_string_closed_form_matches_pencil():
    node, fam, pt, group = string_fixture()
    rng = np.random.default_rng(7)
    for _ in range(5):
        d = rng.normal(size=4)
        got = pencil_split(group, d).lambda1
        ref = rs.string_split_node(node, *d).increments
        assert pairwise_close(sorted(got, key=abs), sorted(ref, key=abs), 1e-6 * max(abs(np.array(ref))))


# --- alpha^2 dynamo ----------------------------------------------------------

@pytest.mark.parametrize("idx, a0, lam", [((1, 1, 2, 1), 3 * PI, 2 * PI**2), ((1, 1, 2, -1), -PI, -2 * PI**2),
                                          ((3, 1, 3, -1), 0.0, -9 * PI**2)])
def test_dynamo_nodes(idx, a0, lam):
    node = dy.dynamo_node(*idx)
    assert node.param == pytest.approx(a0, abs=1e-14) and node.eigenvalue == pytest.approx(lam)


def test_dynamo_node_consistency():
    for node in dy.dynamo_nodes(range(1, 7), range(1, 7)):
        for n, e in ((node.n, node.eps), (node.m, node.delta)):
            assert abs(dy.mesh_eigenvalue(n, e, node.param) - node.eigenvalue) < 1e-12 * max(1, abs(node.eigenvalue))


def test_nonzero_mean_profile_rejected():
    with pytest.raises(ZeroMeanViolated):
        dy.Profile(lambda x, dx: np.cos(PI * x) + 0.1 if dx == 0 else -PI * np.sin(PI * x))


def test_profile_specs():
    assert dy.profile_from_spec("cos:2").label == "cos:2"
    with pytest.raises(ValueError):
        dy.profile_from_spec("sin:1")


def test_beta_out_of_range():
    with pytest.raises(ValueError):
        dy.dynamo_problem(dy.DynamoParams(0.0, 0.0, 1.5))


def test_selection_rule_k2():
    prof = dy.CosineProfile(2)
    for node in dy.dynamo_nodes(range(1, 7), range(1, 7)):
        j = node.eps * node.n - node.delta * node.m
        val = dy.selection_integral(prof, node, exact=False)
        assert val == pytest.approx(0.5 if abs(j) == 4 else 0.0, abs=1e-12)


def test_beta_direction_increments():
    node = dy.dynamo_node(1, 1, 2, 1)
    inc = dy.dynamo_split_node(node, beta=1.0, profile=dy.CosineProfile(1)).increments
    assert pairwise_close(inc, [0.0, -2 * node.eigenvalue], 1e-12)


def test_dynamo_closed_form_matches_pencil():
    node, fam, pt, group, prof = dynamo_fixture()
    rng = np.random.default_rng(11)
    for _ in range(5):
        d = rng.normal(size=3)
        got = pencil_split(group, d).lambda1
        ref = dy.dynamo_split_node(node, d[0], d[1], d[2], profile=prof).increments
        assert pairwise_close(sorted(got, key=lambda z: z.real), sorted(ref, key=lambda z: z.real),
                              1e-6 * max(abs(np.array(ref))))


def test_cone_and_radicand_agree():
    rng = np.random.default_rng(3)
    for node in dy.dynamo_nodes(range(1, 4), range(1, 4)):
        for _ in range(5):
            a, b, g, s = rng.normal(size=4)
            assert dy.radicand(node, a, b, g, s) == pytest.approx(dy.cone_radicand(node, a, b, g, s), abs=1e-9)


def test_k2_beta0_tongues():
    tongues = dy.dynamo_tongues(2, beta=0.0)
    assert len(tongues) == 3 and all(t.kind == "cone" for t in tongues)
    a = np.linspace(-4 * PI, 4 * PI, 41)
    g = np.linspace(-20, 20, 41)
    A, G = np.meshgrid(a, g, indexing="ij")
    for t, shown in zip(tongues, dy.k2_beta0_tongues(A, G)):
        np.testing.assert_array_equal(t.inside(A, G), shown)


@pytest.mark.parametrize("k", [1, 2, 3])
def test_cone_count(k):
    assert len(dy.dynamo_tongues(k, beta=0.0)) == 2 * k - 1


def test_principal_tongues_with_beta():
    beta = 0.1
    a = np.linspace(-4 * PI, 4 * PI, 61)
    g = np.linspace(-20, 20, 61)
    A, G = np.meshgrid(a, g, indexing="ij")
    hyper = dy.dynamo_tongues(2, beta=beta, include_ellipses=False)
    for t, shown in zip(hyper, dy.k2_principal_tongues(A, G, beta)):
        assert np.count_nonzero(t.inside(A, G) != shown) == 0


def test_boundary_points_on_radicand_zero():
    for t in dy.dynamo_tongues(2, beta=0.1):
        pts = t.boundary(np.linspace(-20, 20, 81))
        if len(pts):
            scale = max(1.0, float(np.abs(t.radicand(t.node.param, 20.0))))
            assert np.abs(t.radicand(pts[:, 0], pts[:, 1])).max() < 1e-9 * scale


def test_hyperbolic_offsets():
    beta, k = 0.1, 2
    for t in dy.dynamo_tongues(k, beta=beta, include_ellipses=False):
        n = t.node.n
        label = n if n >= k else 2 * k - n
        expected = dy.hyperbolic_gamma_offset(k, label, beta, t.node.param >= 0)
        assert t.gamma_offset() == pytest.approx(expected, abs=1e-12)


def test_ellipse_geometry_and_corridor():
    beta, k = 0.1, 2
    for t in dy.dynamo_tongues(k, beta=beta):
        if t.kind != "ellipse":
            continue
        n = t.node.n
        ac, gc, ah, gh = t.ellipse_geometry()
        sign = 1 if t.node.param > 0 else -1
        assert ac == pytest.approx(sign * 2 * PI * (n + k))
        assert gc == pytest.approx(sign * 2 * (n + k) * PI * beta)
        assert ah == pytest.approx(PI * beta * np.sqrt(n * (2 * k + n)))
        assert gh == pytest.approx(2 * k * PI * beta)
        # the centers lie on gamma = beta alpha0, inside the corridor
        lo, hi = sorted(dy.corridor_lines(k, beta, ac))
        assert lo < gc < hi


def test_ellipses_shrink_with_beta():
    small = [t.ellipse_geometry() for t in dy.dynamo_tongues(2, beta=1e-6) if t.kind == "ellipse"]
    assert max(max(abs(g[2]), abs(g[3])) for g in small) < 1e-4


def test_ellipse_matches_displayed_form():
    beta, k = 0.1, 2
    for t in dy.dynamo_tongues(k, beta=beta):
        if t.kind != "ellipse":
            continue
        ac, gc, ah, gh = t.ellipse_geometry()
        A, G = np.meshgrid(np.linspace(ac - 2, ac + 2, 41), np.linspace(gc - 2, gc + 2, 41), indexing="ij")
        sign = 1 if t.node.param > 0 else -1
        shown = dy.ellipse_inside(k, t.node.n, A, G, beta, sign)
        assert np.count_nonzero(t.inside(A, G) != shown) == 0


def test_ellipse_instability_oracle():
    beta, k = 0.1, 2
    t = next(t for t in dy.dynamo_tongues(k, beta=beta) if t.kind == "ellipse" and t.node.param > 0)
    ac, gc, ah, gh = t.ellipse_geometry()
    lam0 = t.node.eigenvalue
    inside = [(ac, gc), (ac + 0.4 * ah, gc), (ac - 0.4 * ah, gc), (ac, gc + 0.4 * gh), (ac, gc - 0.4 * gh)]
    outside = [(ac + 1.8 * ah, gc), (ac - 1.8 * ah, gc), (ac, gc + 1.8 * gh), (ac, gc - 1.8 * gh),
               (ac + 1.5 * ah, gc + 1.5 * gh)]
    agree = 0
    for pts, expect in ((inside, True), (outside, False)):
        for a, g in pts:
            fam = dy.dynamo_problem(dy.DynamoParams(a, g, beta), dy.CosineProfile(k))
            ev = oracle_eigenvalues(fam, [a, beta, g], Window.around(lam0, 10.0))
            complex_pair = max(abs(z.imag) for z in ev) > 1e-6
            agree += complex_pair == expect and bool(t.oscillatory(a, g)) == expect
    assert agree >= 9
