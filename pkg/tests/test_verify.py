import csv

import numpy as np
import pytest
import scipy.special
import sympy as sym
from hypothesis import given, strategies as st

from surfpoisson import assembly
from surfpoisson.functions import (VectorField, constant, cos_r2, exp_sin, linear, manufactured_cos_r2, monomial,
                                   zero_manufactured)
from surfpoisson.geometry import DomainSpec, cylinder_chart, flat_chart, hemisphere_chart, monge_chart
from surfpoisson.mesh import generate_mesh, quadrature, refinement_sequence
from surfpoisson.verify import (check_coercivity, check_divergence_theorem, check_flattening_ellipticity,
                                check_integration_by_parts, check_norm_equivalence, coercivity_ratio,
                                convergence_study, estimate_poincare_constant, flattening_constant,
                                flattening_form, flattening_min_eigenvalue, flattening_table,
                                write_identity_csv)

Q = quadrature(4)
CAP = hemisphere_chart(2.0, 1.0)


@pytest.fixture(scope="module")
def mesh():
    return generate_mesh(DomainSpec.disk(), 0.05)


def position_xy():
    return VectorField((linear((1, 0)), linear((0, 1)), constant(0.0)))


def const_vec(c):
    return VectorField(tuple(constant(x) for x in c))


# -- divergence theorem -------------------------------------------------------

def test_divergence_flat_position(mesh):
    r = check_divergence_theorem(flat_chart(), mesh, Q, position_xy())
    area = mesh.signed_areas().sum()
    assert r.lhs == pytest.approx(2 * area, rel=1e-13)
    assert r.terms["curvature"] == 0 and r.rel_defect < 1e-13
    assert 2 * area == pytest.approx(2 * np.pi, rel=2e-3)


def test_divergence_flat_constant(mesh):
    r = check_divergence_theorem(flat_chart(), mesh, Q, const_vec((1.0, -2.0, 3.0)))
    assert r.lhs == 0 and abs(r.rhs) < 1e-13 and r.rel_defect < 1e-13


def test_divergence_cap_vertical(mesh):
    r = check_divergence_theorem(CAP, mesh, Q, const_vec((0, 0, 1)))
    assert r.lhs == 0
    assert r.rel_defect < 1e-3
    # on the sphere of radius 2, -int H n3 = int z/2 dA = pi and the rim flux is -pi
    assert r.terms["curvature"] == pytest.approx(np.pi, rel=2e-3)
    assert r.terms["boundary"] == pytest.approx(-np.pi, rel=2e-3)


@pytest.mark.parametrize("chart", [CAP, monge_chart({(2, 0): 0.3, (1, 1): 0.2, (0, 3): 0.1})])
def test_divergence_defect_decreases(chart):
    f = VectorField((cos_r2(0.5), linear((1, 2), 0.3), exp_sin(2, 3)))
    defects = [check_divergence_theorem(chart, m, Q, f).rel_defect
               for m in refinement_sequence(DomainSpec.disk(), 0.2, 3)]
    assert all(b <= 1.1 * a for a, b in zip(defects, defects[1:]))
    assert defects[-1] < 1e-4


# -- integration by parts ----------------------------------------------------

def test_ibp_trivial(mesh):
    r = check_integration_by_parts(flat_chart(), mesh, Q, constant(1.0), constant(1.0), 1)
    assert r.lhs == 0 and abs(r.rhs) < 1e-14


def test_ibp_flat_x1_x1(mesh):
    # every term vanishes by symmetry: int X1 = 0 and int cos^3 = 0
    th = sym.symbols("theta")
    assert sym.integrate(sym.cos(th) ** 3, (th, 0, 2 * sym.pi)) == 0
    r = check_integration_by_parts(flat_chart(), mesh, Q, linear((1, 0)), linear((1, 0)), 1)
    assert abs(r.lhs) < 1e-14 and abs(r.terms["interior"]) < 1e-14 and abs(r.terms["boundary"]) < 1e-14


def test_ibp_cap_x2_x1(mesh):
    r = check_integration_by_parts(CAP, mesh, Q, linear((0, 1)), linear((1, 0)), 3)
    assert abs(r.lhs - r.rhs) < 1e-12
    assert r.rel_defect < 1e-3


@pytest.mark.parametrize("case", [
    (CAP, cos_r2(0.5), linear((1, 1)), 2),
    (monge_chart({(2, 0): 0.3, (1, 1): 0.2, (0, 3): 0.1}), cos_r2(0.5, (0.2, 0)), monomial(2, 1), 3),
    (CAP, exp_sin(4, 5), linear((0, 1), 1), 3),
])
def test_ibp_nonsymmetric_decreases(case):
    chart, f, psi, j = case
    reps = [check_integration_by_parts(chart, m, Q, f, psi, j)
            for m in refinement_sequence(DomainSpec.disk(), 0.2, 3)]
    d = [r.rel_defect for r in reps]
    assert all(b <= 1.1 * a for a, b in zip(d, d[1:]))
    assert d[-1] < 1e-3
    assert max(abs(t) for t in reps[-1].terms.values()) > 0.05  # not a symmetric zero


def test_ibp_rejects_bad_index(mesh):
    with pytest.raises(ValueError):
        check_integration_by_parts(CAP, mesh, Q, constant(1.0), constant(1.0), 4)


def test_identity_csv(tmp_path, mesh):
    reps = [check_divergence_theorem(flat_chart(), mesh, Q, position_xy()),
            check_integration_by_parts(CAP, mesh, Q, cos_r2(0.5), linear((1, 1)), 2)]
    path = tmp_path / "id.csv"
    write_identity_csv(reps, path, "hdr")
    with open(path) as fh:
        assert fh.readline() == "# hdr\n"
        rows = list(csv.DictReader(fh))
    assert [r["name"] for r in rows] == ["divergence_theorem", "integration_by_parts_j2"]
    assert float(rows[1]["rel_defect"]) == reps[1].rel_defect
    assert int(rows[0]["quadrature_order"]) == 4


# -- Poincare constant ---------------------------------------------------------

@pytest.fixture(scope="module")
def flat_ops(mesh):
    return assembly.stiffness(flat_chart(), mesh, Q), assembly.mass(flat_chart(), mesh, Q)


def test_poincare_flat_disk(flat_ops):
    oracle = scipy.special.jnp_zeros(1, 1)[0] ** 2
    est = estimate_poincare_constant(*flat_ops)
    assert est.lambda1 == pytest.approx(oracle, rel=5e-3)
    assert est.C_star == pytest.approx(1 / np.sqrt(oracle), rel=5e-3)
    assert est.lambda1 >= oracle  # P1 Galerkin eigenvalues bound from above


def test_poincare_cylinder_matches_flat(mesh, flat_ops):
    A = assembly.stiffness(cylinder_chart(), mesh, Q)
    M = assembly.mass(cylinder_chart(), mesh, Q)
    assert estimate_poincare_constant(A, M).lambda1 == pytest.approx(
        estimate_poincare_constant(*flat_ops).lambda1, rel=1e-8)


def test_poincare_dilation():
    m1 = generate_mesh(DomainSpec.disk(), 0.1)
    m2 = generate_mesh(DomainSpec.disk(radius=2.0), 0.2)
    ch1, ch2 = flat_chart(DomainSpec.disk()), flat_chart(DomainSpec.disk(radius=2.0))
    l1 = estimate_poincare_constant(assembly.stiffness(ch1, m1), assembly.mass(ch1, m1)).lambda1
    l2 = estimate_poincare_constant(assembly.stiffness(ch2, m2), assembly.mass(ch2, m2)).lambda1
    assert l2 == pytest.approx(l1 / 4, rel=1e-6)


def test_poincare_renumbering(flat_ops, rng):
    A, M = flat_ops
    p = rng.permutation(A.shape[0])
    a = estimate_poincare_constant(A, M).lambda1
    b = estimate_poincare_constant(A[p][:, p], M[p][:, p], seed=3).lambda1
    assert a == pytest.approx(b, rel=1e-7)


# -- coercivity ---------------------------------------------------------------

def test_coercivity(flat_ops):
    A, M = flat_ops
    est = estimate_poincare_constant(A, M)
    assert coercivity_ratio(A, M, est.C_star, est.eigenvector) == pytest.approx(1.0, abs=1e-7)
    assert check_coercivity(A, M, est.C_star, samples=100) >= 1 - 1e-6
    # a constant-shifted eigenvector projected back to mean zero
    m1 = M @ np.ones(A.shape[0])
    v = est.eigenvector + 5.0
    v -= m1 @ v / m1.sum()
    assert coercivity_ratio(A, M, est.C_star, v) >= 1 - 1e-6


def test_coercivity_on_cap():
    m = generate_mesh(DomainSpec.disk(), 0.1)
    A, M = assembly.stiffness(CAP, m), assembly.mass(CAP, m)
    est = estimate_poincare_constant(A, M)
    assert check_coercivity(A, M, est.C_star, samples=50, seed=5) >= 1 - 1e-6


# -- norm equivalence ---------------------------------------------------------

@pytest.mark.parametrize("chart", [CAP, monge_chart({(2, 0): 0.4, (0, 2): 0.4})])
def test_norm_equivalence(chart):
    m = generate_mesh(DomainSpec.disk(), 0.1)
    rep = check_norm_equivalence(chart, m, Q, samples=100)
    assert rep.passed
    assert rep.lambda_min <= rep.lambda_max


def test_norm_equivalence_flat_is_tight():
    m = generate_mesh(DomainSpec.disk(), 0.2)
    rep = check_norm_equivalence(flat_chart(), m, Q, samples=5)
    for p in (1, 2, 4):
        assert abs(rep.worst_lower_margin[p]) < 1e-12 and abs(rep.worst_upper_margin[p]) < 1e-12


# -- flattening ---------------------------------------------------------------

def test_flattening_table_against_eigvalsh():
    table = flattening_table((0.0, 1.0, 2.0))
    for b, cb, lam in table:
        mat = np.array([[1.0, -b], [-b, 1.0 + b * b]])
        assert lam == pytest.approx(np.linalg.eigvalsh(mat)[0], abs=1e-12)
        assert lam >= cb
    assert [r[1] for r in table] == pytest.approx([0.5, 1 / 3, 1 / 9], abs=1e-15)
    assert table[1][2] == pytest.approx((3 - np.sqrt(5)) / 2, abs=1e-12)
    assert table[2][2] == pytest.approx(3 - 2 * np.sqrt(2), abs=1e-12)


def test_flattening_b_zero():
    xi = np.random.default_rng(0).standard_normal((20, 2))
    np.testing.assert_allclose(flattening_form(0.0, xi), np.sum(xi ** 2, axis=1))
    m = check_flattening_ellipticity(np.zeros(20), xi)
    assert m == pytest.approx(np.min(np.sum(xi ** 2, axis=1)) / 2)


@given(st.lists(st.tuples(st.floats(-10, 10), st.floats(-1e3, 1e3), st.floats(-1e3, 1e3)),
                min_size=1, max_size=20))
def test_flattening_ellipticity_property(samples):
    b = np.array([s[0] for s in samples])
    xi = np.array([s[1:] for s in samples])
    scale = max(1.0, np.max(np.sum(xi ** 2, axis=1)) * (1 + b.max() ** 2))
    assert check_flattening_ellipticity(b, xi) >= -1e-12 * scale
    assert np.all(flattening_min_eigenvalue(b) >= flattening_constant(b) * (1 - 1e-12))


def test_flattening_pairs_must_match():
    with pytest.raises(ValueError):
        check_flattening_ellipticity([0.0, 1.0], [[1.0, 0.0]])


# -- convergence --------------------------------------------------------------

@pytest.fixture(scope="module")
def flat_table():
    return convergence_study(flat_chart(), DomainSpec.disk(), manufactured_cos_r2(), levels=4)


def test_convergence_rates(flat_table):
    assert len(flat_table.rows) == 4
    assert flat_table.l2_rate == pytest.approx(2.0, abs=0.25)
    assert flat_table.h1_rate == pytest.approx(1.0, abs=0.25)
    assert np.all(np.diff(flat_table.column("l2_error")) < 0)
    assert np.isnan(flat_table.rows[0].l2_rate)


def test_convergence_zero_solution():
    t = convergence_study(CAP, DomainSpec.disk(), zero_manufactured(), levels=2)
    for r in t.rows:
        assert r.l2_error == 0 and r.h1_error == 0 and r.flux_residual == 0


def test_convergence_cylinder_matches_flat(flat_table):
    t = convergence_study(cylinder_chart(), DomainSpec.disk(), manufactured_cos_r2(), levels=4)
    for name in ("h", "l2_error", "h1_error", "flux_residual"):
        np.testing.assert_allclose(t.column(name), flat_table.column(name), rtol=1e-10, atol=1e-14)


def test_convergence_csv(tmp_path, flat_table):
    path = tmp_path / "conv.csv"
    flat_table.write_csv(path, "hdr")
    with open(path) as fh:
        assert fh.readline() == "# hdr\n"
        rows = list(csv.DictReader(fh))
    assert len(rows) == 4 and float(rows[-1]["l2_rate"]) == flat_table.l2_rate
