import dataclasses

import numpy as np
import pytest
import sympy as sp
from hypothesis import given, strategies as st

from surfpoisson.errors import DegenerateMetric, ZeroTangent
from surfpoisson.geometry import (DomainSpec, conormal, conormal_from_normal, cylinder_chart, flat_chart,
                                  hemisphere_chart, make_chart, mean_curvature, metric_frame, monge_chart,
                                  pinched_chart, sample_points, validate_chart)

X1, X2 = sp.symbols("X1 X2", real=True)


def symbolic_oracle(expr):
    """Frame data and mean curvature of a symbolic chart, lambdified.

    H uses the second fundamental form, g^{ab} n . x_ab, which is a different
    route from the -g^{ab} g_a . dn/dX_b used in the package.
    """
    x = sp.Matrix(expr)
    g1, g2 = x.diff(X1), x.diff(X2)
    g = sp.Matrix([[g1.dot(g1), g1.dot(g2)], [g2.dot(g1), g2.dot(g2)]])
    gi = g.inv()
    c = g1.cross(g2)
    n = c / sp.sqrt(c.dot(c))
    second = [[x.diff(a).diff(b) for b in (X1, X2)] for a in (X1, X2)]
    H = sum(gi[a, b] * n.dot(second[a][b]) for a in range(2) for b in range(2))
    f = lambda e: sp.lambdify((X1, X2), e, "numpy")
    return {"g": f(g), "gi": f(gi), "n": f(n), "H": f(H), "sqrtG": f(sp.sqrt(c.dot(c)))}


def _points(domain, rng, k=25, shrink=0.97):
    rho = shrink * np.sqrt(rng.uniform(0, 1, k))
    th = rng.uniform(0, 2 * np.pi, k)
    return domain.from_polar(rho, th)


CASES = {
    "cylinder": (cylinder_chart(DomainSpec.disk()), [sp.cos(X1), sp.sin(X1), X2]),
    "cylinder_R2": (cylinder_chart(DomainSpec.disk(), 2.0), [2 * sp.cos(X1), 2 * sp.sin(X1), X2]),
    "hemisphere": (hemisphere_chart(2.0, 1.0), [X1, X2, sp.sqrt(4 - X1 ** 2 - X2 ** 2)]),
    "monge": (monge_chart({(2, 0): 0.3, (1, 1): -0.2, (0, 3): 0.1, (2, 2): 0.05}),
              [X1, X2, sp.Rational(3, 10) * X1 ** 2 - sp.Rational(1, 5) * X1 * X2
               + sp.Rational(1, 10) * X2 ** 3 + sp.Rational(1, 20) * X1 ** 2 * X2 ** 2]),
}


@pytest.mark.parametrize("name", sorted(CASES))
def test_metric_frame_matches_symbolic_oracle(name, rng):
    chart, expr = CASES[name]
    orc = symbolic_oracle(expr)
    X = _points(chart.domain, rng)
    fr = metric_frame(chart, X)
    for i, (a, b) in enumerate(X):
        np.testing.assert_allclose(fr.g_lower[i], np.array(orc["g"](a, b), dtype=float), atol=1e-12)
        np.testing.assert_allclose(fr.g_upper[i], np.array(orc["gi"](a, b), dtype=float), atol=1e-12)
        np.testing.assert_allclose(fr.n[i], np.array(orc["n"](a, b), dtype=float).ravel(), atol=1e-12)
        np.testing.assert_allclose(fr.sqrtG[i], float(orc["sqrtG"](a, b)), rtol=1e-12)
        np.testing.assert_allclose(fr.H[i], float(orc["H"](a, b)), atol=1e-11)


def test_flat_frame_is_planar():
    fr = metric_frame(flat_chart(), np.array([[0.3, -0.2], [0.0, 0.0]]))
    np.testing.assert_array_equal(fr.g_lower, np.broadcast_to(np.eye(2), (2, 2, 2)))
    np.testing.assert_array_equal(fr.sqrtG, 1.0)
    np.testing.assert_array_equal(fr.H, 0.0)
    np.testing.assert_array_equal(fr.n, [[0, 0, 1], [0, 0, 1]])


def test_cylinder_frame():
    X = np.array([[0.4, 0.1], [-0.7, 0.5]])
    fr = metric_frame(cylinder_chart(), X)
    np.testing.assert_allclose(fr.g_lower, np.broadcast_to(np.eye(2), (2, 2, 2)), atol=1e-15)
    np.testing.assert_allclose(fr.n[:, :2], np.stack([np.cos(X[:, 0]), np.sin(X[:, 0])], 1), atol=1e-15)
    np.testing.assert_allclose(fr.H, -1.0, atol=1e-14)


def test_hemisphere_apex():
    ch = hemisphere_chart(2.0, 1.0)
    fr = metric_frame(ch, np.zeros(2))
    np.testing.assert_allclose(fr.g_lower, np.eye(2), atol=1e-15)
    np.testing.assert_allclose(fr.n, [0, 0, 1], atol=1e-15)
    assert mean_curvature(ch, np.zeros(2)) == pytest.approx(-1.0, abs=1e-14)


def test_sphere_mean_curvature_is_constant(rng):
    ch = hemisphere_chart(2.0, 1.0)
    np.testing.assert_allclose(mean_curvature(ch, _points(ch.domain, rng, 50)), -1.0, atol=1e-12)


@pytest.mark.parametrize("name", sorted(CASES) + ["flat"])
def test_finite_difference_consistency(name, rng):
    chart = flat_chart() if name == "flat" else CASES[name][0]
    X = _points(chart.domain, rng, 200, shrink=0.9)
    step = 1e-5
    for a in range(2):
        e = np.zeros(2)
        e[a] = step
        fd = (chart.position(X + e) - chart.position(X - e)) / (2 * step)
        np.testing.assert_allclose(fd, chart.jacobian(X)[:, a, :], rtol=1e-6, atol=1e-8)
        fdh = (chart.jacobian(X + e) - chart.jacobian(X - e)) / (2 * step)
        np.testing.assert_allclose(fdh, chart.hessian(X)[:, :, a, :], rtol=1e-6, atol=1e-7)


coef = st.floats(-0.5, 0.5, allow_nan=False)


@given(c20=coef, c11=coef, c02=coef, c30=coef, c13=coef,
       x=st.floats(-0.7, 0.7), y=st.floats(-0.7, 0.7))
def test_frame_invariants_on_random_monge(c20, c11, c02, c30, c13, x, y):
    ch = monge_chart({(2, 0): c20, (1, 1): c11, (0, 2): c02, (3, 0): c30, (1, 3): c13})
    fr = metric_frame(ch, np.array([x, y]))
    np.testing.assert_allclose(fr.g_lower @ fr.g_upper, np.eye(2), atol=1e-12)
    np.testing.assert_allclose(fr.g_upper, fr.g_upper.T, atol=1e-15)
    assert np.all(np.linalg.eigvalsh(fr.g_upper) > 0)
    assert abs(np.linalg.norm(fr.n) - 1) < 1e-14
    assert abs(fr.n @ fr.g1) < 1e-13 and abs(fr.n @ fr.g2) < 1e-13
    assert fr.G == pytest.approx(np.linalg.det(fr.g_lower), rel=1e-12)


def test_conormal_flat_is_planar_normal():
    s = np.linspace(0, 2 * np.pi, 17)
    nu = conormal(flat_chart(), s)
    np.testing.assert_allclose(nu, np.stack([np.cos(s), np.sin(s), 0 * s], 1), atol=1e-15)


@pytest.mark.parametrize("chart", [cylinder_chart(), hemisphere_chart(2.0, 1.0),
                                   monge_chart({(2, 0): 0.4, (0, 3): -0.3}, DomainSpec.ellipse(1.0, 0.5))])
def test_conormal_is_unit_tangent_outward(chart):
    s = np.linspace(0, 2 * np.pi, 41)
    dom = chart.domain
    X = dom.boundary_point(s)
    nu = conormal(chart, s)
    fr = metric_frame(chart, X)
    np.testing.assert_allclose(np.linalg.norm(nu, axis=1), 1.0, atol=1e-12)
    np.testing.assert_allclose(np.einsum("ij,ij->i", nu, fr.n), 0.0, atol=1e-12)
    # outward: stepping inside U moves against nu on the surface
    inner = chart.position(X - 1e-4 * dom.boundary_normal(s))
    assert np.all(np.einsum("ij,ij->i", chart.position(X) - inner, nu) > 0)
    # orthogonal to the boundary curve tangent
    tangent = chart.position(dom.boundary_point(s + 1e-6)) - chart.position(dom.boundary_point(s - 1e-6))
    np.testing.assert_allclose(np.einsum("ij,ij->i", tangent, nu) / 2e-6, 0.0, atol=1e-8)


def test_hemisphere_conormal_points_away_from_apex():
    nu = conormal(hemisphere_chart(2.0, 1.0), np.array(0.0))
    assert nu[0] > 0 and nu[2] < 0 and abs(nu[1]) < 1e-15


def test_zero_tangent_raises():
    # with the degeneracy floor switched off, g2 = 0 at (1, 0) makes n1 g2 - n2 g1 vanish
    chart = dataclasses.replace(pinched_chart(), lambda_min_floor=0.0)
    with pytest.raises(ZeroTangent):
        conormal_from_normal(chart, np.array([1.0, 0.0]), np.array([1.0, 0.0]))


def test_degenerate_metric_raises():
    with pytest.raises(DegenerateMetric):
        metric_frame(pinched_chart(), np.array([0.2, 0.0]))


def test_validate_flat():
    rep = validate_chart(flat_chart())
    assert rep.passed
    assert rep.lambda_min_est == pytest.approx(1.0)
    assert rep.lambda_0_est == pytest.approx(1.0)


def test_validate_hemisphere_against_dense_sampling():
    ch = hemisphere_chart(2.0, 1.0)
    rep = validate_chart(ch, sampling=16)
    # brute force on a dense Cartesian grid clipped to the closed disk
    t = np.linspace(-1, 1, 801)
    P = np.stack(np.meshgrid(t, t), -1).reshape(-1, 2)
    P = P[np.hypot(P[:, 0], P[:, 1]) <= 1]
    sqrtG = 2.0 / np.sqrt(4.0 - np.einsum("ij,ij->i", P, P))
    assert rep.lambda_min_est == pytest.approx(sqrtG.min(), abs=1e-12)
    assert rep.lambda_max_est == pytest.approx(2 / np.sqrt(3), rel=1e-12)
    # the minimum sits at the apex, not on the rim
    assert rep.worst_points[-2]["X"] == [0.0, 0.0]
    # smallest eigenvalue of g^{ab} is 1/(1 + |grad z|^2), smallest on the rim
    assert rep.lambda_0_est == pytest.approx(3 / 4, rel=1e-12)


def test_validate_degenerate_flags_points():
    rep = validate_chart(pinched_chart())
    assert not rep.passed and rep.degenerate
    assert any(w["flag"] == "DegenerateMetric" for w in rep.worst_points)


def test_sample_points_cover_boundary():
    dom = DomainSpec.ellipse(2.0, 1.0, (0.5, -0.5))
    P = sample_points(dom, 8)
    assert len(P) >= 64
    assert np.isclose(dom.level(P).max(), 1.0)
    assert np.any(np.all(P == dom.center, axis=1))
    with pytest.raises(ValueError):
        sample_points(dom, 4)


def test_domain_boundary_normals():
    dom = DomainSpec.ellipse(2.0, 1.0)
    s = np.linspace(0, 2 * np.pi, 13)
    n = dom.boundary_normal(s)
    np.testing.assert_allclose(np.linalg.norm(n, axis=1), 1.0)
    P = dom.boundary_point(s)
    # gradient of the level function is parallel to n
    grad = np.stack([P[:, 0] / 4, P[:, 1]], 1)
    np.testing.assert_allclose(grad[:, 0] * n[:, 1] - grad[:, 1] * n[:, 0], 0.0, atol=1e-15)
    np.testing.assert_allclose(dom.level(dom.project(P * 0.3 + 0.01)), 1.0)


def test_make_chart_catalog():
    dom = DomainSpec.disk()
    assert make_chart("flat", {}, dom).kind == "flat"
    assert make_chart("cylinder", {"radius": 2.0}, dom).catalog_id == ("cylinder", 2.0)
    assert make_chart("monge", {"coefficients": [[2, 0, 0.1]]}, dom).kind == "monge"
    with pytest.raises(ValueError):
        make_chart("torus", {}, dom)
    with pytest.raises(ValueError):
        monge_chart({(5, 0): 1.0})
    with pytest.raises(ValueError):
        hemisphere_chart(1.0, 1.5)
