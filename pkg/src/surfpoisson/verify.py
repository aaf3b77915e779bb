"""Numerical checks of surface identities and inequalities.

Identity checks integrate analytic fields with the mesh quadrature over the
image of the polygonal parameter domain, so both sides refer to the same
surface patch and the defect is pure quadrature error.
"""
from __future__ import annotations

import csv
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from . import assembly
from .errors import EigenNoConvergence
from .geometry import _frame_arrays, _mean_curvature, validate_chart
from .mesh import quadrature, quadrature_points, refinement_sequence
from .solver import solve_conormal_problem, solve_neumann


# ---------------------------------------------------------------------------
# reports
# ---------------------------------------------------------------------------

@dataclass
class IdentityReport:
    lhs: float
    rhs: float
    abs_defect: float
    rel_defect: float
    mesh_h: float
    quadrature_order: int
    name: str = ""
    terms: dict = field(default_factory=dict)

    def to_dict(self):
        return asdict(self)


def _identity(name, lhs, rhs_terms, mesh, quad, magnitude=0.0):
    """``magnitude`` is the sum of the L1 norms of all integrands; it keeps the
    relative defect meaningful when every term vanishes by symmetry."""
    rhs = float(sum(rhs_terms.values()))
    scale = max(abs(lhs), abs(rhs), *(abs(t) for t in rhs_terms.values()), magnitude, 1e-30)
    d = abs(lhs - rhs)
    return IdentityReport(float(lhs), rhs, float(d), float(d / scale), mesh.h, quad.order, name,
                          {k: float(v) for k, v in rhs_terms.items()})


IDENTITY_COLUMNS = ("name", "lhs", "rhs", "abs_defect", "rel_defect", "mesh_h", "quadrature_order")


def write_identity_csv(reports, path, header=None):
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(f"# {header}\n")
        w = csv.writer(fh)
        w.writerow(IDENTITY_COLUMNS)
        for r in reports:
            w.writerow([r.name] + [repr(getattr(r, c)) for c in IDENTITY_COLUMNS[1:]])


@dataclass
class ConvergenceRow:
    h: float
    n_vertices: int
    l2_error: float
    h1_error: float
    flux_residual: float
    mean_value: float
    iterations: int
    stability_ratio: float
    l2_rate: float = math.nan
    h1_rate: float = math.nan


@dataclass
class ConvergenceTable:
    rows: list

    @property
    def l2_rate(self):
        return self.rows[-1].l2_rate if len(self.rows) > 1 else math.nan

    @property
    def h1_rate(self):
        return self.rows[-1].h1_rate if len(self.rows) > 1 else math.nan

    def column(self, name):
        return np.array([getattr(r, name) for r in self.rows])

    def write_csv(self, path, header=None):
        cols = list(ConvergenceRow.__dataclass_fields__)
        with open(path, "w", newline="") as fh:
            if header:
                fh.write(f"# {header}\n")
            w = csv.writer(fh)
            w.writerow(cols)
            for r in self.rows:
                w.writerow([repr(getattr(r, c)) for c in cols])


# ---------------------------------------------------------------------------
# pointwise helpers on analytic fields
# ---------------------------------------------------------------------------

def _surface_gradient(J, g_upper, dphi):
    """grad_G of a pullback from its parameter gradient, (..., 3)."""
    return np.einsum("...ab,...ai,...b->...i", g_upper, J, dphi)


def _quad_data(chart, mesh, quad):
    X = quadrature_points(mesh, quad)
    J, _, g_upper, _, sqrtG, n = _frame_arrays(chart, X)
    H = _mean_curvature(chart, X, J, g_upper, n, sqrtG)
    _, areas = mesh.gradients()
    w = quad.weights[None, :] * sqrtG * areas[:, None]
    return X, J, g_upper, n, H, w


def check_divergence_theorem(chart, mesh, quad, f):
    """int div_G f = -int H (n . f) + int_boundary nu . f for an analytic VectorField f."""
    quad = quad or quadrature(4)
    X, J, g_upper, n, H, w = _quad_data(chart, mesh, quad)
    div = np.einsum("...ab,...aj,...jb->...", g_upper, J, f.jacobian(X))
    curv = H * np.einsum("...i,...i->...", n, f.value(X))

    def flux(Y, nu):
        return np.einsum("...i,...i->...", nu, f.value(Y))

    bnd = assembly.boundary_integrate(chart, mesh, flux)
    mag = (np.sum(w * np.abs(div)) + np.sum(w * np.abs(curv))
           + assembly.boundary_integrate(chart, mesh, lambda Y, nu: np.abs(flux(Y, nu))))
    return _identity("divergence_theorem", np.sum(w * div),
                     {"curvature": -np.sum(w * curv), "boundary": bnd}, mesh, quad, mag)


def check_integration_by_parts(chart, mesh, quad, f, psi, j):
    """int f d_j psi = -int (d_j f + H n_j f) psi + int_boundary nu_j f psi, j in {1, 2, 3}."""
    if j not in (1, 2, 3):
        raise ValueError("j must be 1, 2 or 3")
    k = j - 1
    quad = quad or quadrature(4)
    X, J, g_upper, n, H, w = _quad_data(chart, mesh, quad)
    fv, pv = f(X), psi(X)
    dpsi = _surface_gradient(J, g_upper, psi.grad(X))[..., k]
    df = _surface_gradient(J, g_upper, f.grad(X))[..., k]
    lhs_density = fv * dpsi
    interior_density = (df + H * n[..., k] * fv) * pv

    def flux(Y, nu):
        return nu[..., k] * f(Y) * psi(Y)

    bnd = assembly.boundary_integrate(chart, mesh, flux)
    mag = (np.sum(w * np.abs(lhs_density)) + np.sum(w * np.abs(interior_density))
           + assembly.boundary_integrate(chart, mesh, lambda Y, nu: np.abs(flux(Y, nu))))
    return _identity(f"integration_by_parts_j{j}", np.sum(w * lhs_density),
                     {"interior": -np.sum(w * interior_density), "boundary": bnd}, mesh, quad, mag)


# ---------------------------------------------------------------------------
# Poincare constant and coercivity
# ---------------------------------------------------------------------------

@dataclass
class PoincareEstimate:
    lambda1: float
    C_star: float
    iterations: int
    eigenvector: np.ndarray


def estimate_poincare_constant(A, M, tol=1e-8, max_iter=200, seed=0):
    """Smallest positive eigenvalue of A u = lambda M u by inverse iteration.

    Each step applies the mean-zero Neumann solve to M u, which deflates
    the constants. Stops when the Rayleigh quotient changes by less than
    ``tol`` relatively.
    """
    rng = np.random.default_rng(seed)
    u = rng.standard_normal(A.shape[0])
    lam_old = np.inf
    for it in range(1, max_iter + 1):
        u = solve_neumann(A, M, M @ u, tol=1e-12).solution
        u /= math.sqrt(u @ (M @ u))
        lam = float(u @ (A @ u))
        if abs(lam - lam_old) <= tol * lam:
            return PoincareEstimate(lam, 1.0 / math.sqrt(lam), it, u)
        lam_old = lam
    raise EigenNoConvergence(f"inverse iteration stalled after {max_iter} steps (lambda ~ {lam:.6g})")


def coercivity_ratio(A, M, C_star, v):
    """v^T A v divided by (v^T M v + v^T A v) / (C*^2 + 1); at least 1 for mean-zero v."""
    a = v @ (A @ v)
    m = v @ (M @ v)
    return float(a * (C_star ** 2 + 1.0) / (m + a))


def check_coercivity(A, M, C_star, samples=100, seed=0):
    """Worst coercivity ratio over random mean-zero nodal fields."""
    rng = np.random.default_rng(seed)
    m1 = M @ np.ones(A.shape[0])
    worst = np.inf
    for _ in range(samples):
        v = rng.standard_normal(A.shape[0])
        v -= (m1 @ v / m1.sum())
        worst = min(worst, coercivity_ratio(A, M, C_star, v))
    return worst


# ---------------------------------------------------------------------------
# norm equivalence between U and the surface
# ---------------------------------------------------------------------------

@dataclass
class NormEquivalenceReport:
    lambda_min: float
    lambda_max: float
    worst_lower_margin: dict
    worst_upper_margin: dict

    @property
    def passed(self):
        return (min(self.worst_lower_margin.values()) >= 0
                and min(self.worst_upper_margin.values()) >= 0)


def check_norm_equivalence(chart, mesh, quad=None, samples=100, p_values=(1, 2, 4), seed=0,
                           sampling=32):
    """lambda_min^(1/p) ||f||_U <= ||f||_surface <= lambda_max^(1/p) ||f||_U for random nodal f.

    Margins are relative: ||f||_surface / ||f||_U - lambda_min^(1/p), and the
    mirror image for the upper bound.
    """
    quad = quad or quadrature(4)
    rep = validate_chart(chart, sampling=sampling)
    lo, hi = rep.lambda_min_est, rep.lambda_max_est
    rng = np.random.default_rng(seed)
    lower = {p: np.inf for p in p_values}
    upper = {p: np.inf for p in p_values}
    for _ in range(samples):
        v = rng.standard_normal(mesh.n_vertices)
        for p in p_values:
            r = (assembly.lp_norm(chart, mesh, quad, v, p)
                 / assembly.lp_norm(chart, mesh, quad, v, p, weight="parameter"))
            lower[p] = min(lower[p], r - lo ** (1.0 / p))
            upper[p] = min(upper[p], hi ** (1.0 / p) - r)
    return NormEquivalenceReport(lo, hi, lower, upper)


# ---------------------------------------------------------------------------
# flattening ellipticity
# ---------------------------------------------------------------------------

def flattening_constant(b_prime):
    """C_b = min(1 / (1 + 2 b'^2), 1/2)."""
    b2 = np.asarray(b_prime, dtype=float) ** 2
    return np.minimum(1.0 / (1.0 + 2.0 * b2), 0.5)


def flattening_form(b_prime, xi):
    """xi1^2 + (1 + b'^2) xi2^2 - 2 b' xi1 xi2."""
    b = np.asarray(b_prime, dtype=float)
    xi = np.asarray(xi, dtype=float)
    return xi[..., 0] ** 2 + (1.0 + b * b) * xi[..., 1] ** 2 - 2.0 * b * xi[..., 0] * xi[..., 1]


def flattening_min_eigenvalue(b_prime):
    """Smallest eigenvalue of [[1, -b'], [-b', 1 + b'^2]] (determinant 1)."""
    t = 2.0 + np.asarray(b_prime, dtype=float) ** 2
    # product of the roots is 1, so divide instead of subtracting close numbers
    return 2.0 / (t + np.sqrt(t * t - 4.0))


def check_flattening_ellipticity(b_prime_samples, xi_samples):
    """Worst margin form - C_b |xi|^2 over paired samples."""
    b = np.asarray(b_prime_samples, dtype=float)
    xi = np.asarray(xi_samples, dtype=float).reshape(-1, 2)
    if len(b) != len(xi):
        raise ValueError("need one xi per b' sample")
    margin = flattening_form(b, xi) - flattening_constant(b) * np.einsum("ij,ij->i", xi, xi)
    return float(margin.min())


def flattening_table(b_values=(0.0, 1.0, 2.0)):
    """Rows (b', C_b, smallest eigenvalue of the form)."""
    return [(float(b), float(flattening_constant(b)), float(flattening_min_eigenvalue(b)))
            for b in b_values]


# ---------------------------------------------------------------------------
# manufactured-solution convergence
# ---------------------------------------------------------------------------

def solution_errors(chart, mesh, quad, v_h, exact):
    """(L2, H1-seminorm) errors of v_h against exact minus its surface mean."""
    X, J, g_upper, _, _, w = _quad_data(chart, mesh, quad)
    ve = exact(X)
    ve = ve - np.sum(w * ve) / np.sum(w)
    e = assembly.interpolate(mesh, quad, v_h) - ve
    de = assembly.parameter_gradients(mesh, v_h)[:, None, :] - exact.grad(X)
    l2 = math.sqrt(np.sum(w * e * e))
    h1 = math.sqrt(max(np.sum(w * np.einsum("tqab,tqa,tqb->tq", g_upper, de, de)), 0.0))
    return l2, h1


def convergence_study(chart, domain, manufactured, levels=4, h0=0.4, quad=None,
                      tol=1e-10, meshes=None):
    """Solve the manufactured co-normal problem on a uniform refinement sequence."""
    quad = quad or quadrature(4)
    meshes = meshes or refinement_sequence(domain, h0, levels)
    F = manufactured.forcing(chart)
    rows = []
    for mesh in meshes:
        rep = solve_conormal_problem(chart, mesh, F, quad, tol)
        l2, h1 = solution_errors(chart, mesh, quad, rep.solution, manufactured.solution)
        f_norm = math.sqrt(assembly.integrate(chart, mesh, quad, lambda X: F(X) ** 2))
        v_norm = assembly.w12_norm(chart, mesh, quad, rep.solution)
        stab = v_norm / f_norm if f_norm > 0 else 0.0
        row = ConvergenceRow(mesh.h, mesh.n_vertices, l2, h1, rep.flux_residual,
                             rep.mean_value, rep.iterations, stab)
        if rows:
            prev = rows[-1]
            row.l2_rate = _rate(prev.l2_error, l2)
            row.h1_rate = _rate(prev.h1_error, h1)
        rows.append(row)
    return ConvergenceTable(rows)


def _rate(coarse, fine):
    if coarse <= 0 or fine <= 0:
        return math.nan
    return math.log2(coarse / fine)
