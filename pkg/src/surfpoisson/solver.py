"""Discrete co-normal (pure Neumann) and Dirichlet solves.

The co-normal problem is singular: constants span the kernel of the
stiffness matrix. It is solved on the mean-zero subspace {v : 1^T M v = 0}
by Jacobi-preconditioned conjugate gradients, projecting out constants
every iteration instead of pinning a vertex.
"""
from __future__ import annotations

import logging
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import assembly
from .assembly import SurfaceField
from .errors import IncompatibleLoad, MaxIterExceeded, SingularInteriorBlock
from .geometry import _frame_arrays, conormal_from_normal
from .mesh import quadrature

log = logging.getLogger(__name__)

DEFAULT_TOL = 1e-10
DEFAULT_COMPATIBILITY_THRESHOLD = 1e-8


@dataclass
class SolveReport:
    solution: np.ndarray
    iterations: int
    algebraic_residual: float
    compatibility_defect: float
    mean_value: float
    flux_residual: float | None
    energy: float
    converged: bool = True
    energies: list = field(default_factory=list)

    def to_dict(self):
        d = asdict(self)
        d.pop("solution")
        if not d["energies"]:
            d.pop("energies")
        return d


def _pcg(apply_A, rhs, x0, diag, tol, max_iter, project=None, on_iterate=None):
    """Preconditioned CG. Returns (x, iterations, converged).

    ``project`` (optional) maps a vector onto the admissible subspace. It is
    applied to the initial guess and to every preconditioned direction.
    """
    norm_b = np.linalg.norm(rhs)
    x = x0.copy()
    if project is not None:
        x = project(x)
    r = rhs - apply_A(x)
    if norm_b == 0.0:
        return np.zeros_like(x), 0, True
    if np.linalg.norm(r) <= tol * norm_b:
        return x, 0, True
    z = r / diag
    if project is not None:
        z = project(z)
    p = z.copy()
    rz = r @ z
    for it in range(1, max_iter + 1):
        Ap = apply_A(p)
        pAp = p @ Ap
        if not pAp > 0:
            raise SingularInteriorBlock(f"CG breakdown (p^T A p = {pAp:.3g})")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        if on_iterate is not None:
            on_iterate(x)
        if np.linalg.norm(r) <= tol * norm_b:
            # guard against drift of the recursive residual
            r_true = rhs - apply_A(x)
            if np.linalg.norm(r_true) <= tol * norm_b:
                return x, it, True
            r = r_true
        z = r / diag
        if project is not None:
            z = project(z)
        rz_new = r @ z
        p = z + (rz_new / rz) * p
        rz = rz_new
    return x, max_iter, False


def check_compatibility(chart, mesh, quad, F):
    """|int F dH^2| / int |F| dH^2, or 0 when F vanishes identically."""
    quad = quad or quadrature(4)
    total = assembly.integrate(chart, mesh, quad, F)
    scale = assembly.integrate(chart, mesh, quad, lambda X: np.abs(F(X)))
    if scale == 0.0:
        return 0.0
    return abs(total) / scale


def mean_zero_projector(M):
    ones = np.ones(M.shape[0])
    m1 = M @ ones
    area = m1.sum()

    def project(x):
        return x - (m1 @ x / area) * ones

    return project, m1, area


def solve_neumann(A, M, b, tol=DEFAULT_TOL, max_iter=None, x0=None, *,
                  strict=False, compatibility_threshold=DEFAULT_COMPATIBILITY_THRESHOLD,
                  compatibility_defect=None, debug=False, raise_on_failure=False):
    """Minimize 1/2 v^T A v - b^T v over mean-zero v.

    The load is first projected onto the range of A,
    b <- b - (1^T b / 1^T M 1) M 1, so a slightly incompatible load is
    solved in the least-squares sense and its defect reported. With
    ``strict=True`` a defect above ``compatibility_threshold`` raises
    IncompatibleLoad.
    """
    b = np.asarray(b, dtype=float)
    N = len(b)
    max_iter = 10 * N if max_iter is None else int(max_iter)
    project, m1, area = mean_zero_projector(M)
    if compatibility_defect is None:
        scale = np.abs(b).sum()
        compatibility_defect = abs(b.sum()) / scale if scale > 0 else 0.0
    if strict and compatibility_defect > compatibility_threshold:
        raise IncompatibleLoad(
            f"compatibility defect {compatibility_defect:.3g} exceeds {compatibility_threshold:.3g}",
            compatibility_defect)
    ones = np.ones(N)

    def project_residual(r):
        return r - (r.sum() / N) * ones

    # the second projection removes roundoff left in the kernel direction
    b_proj = project_residual(b - (b.sum() / area) * m1)
    if np.linalg.norm(b_proj) <= 1e-13 * np.linalg.norm(b):
        b_proj = np.zeros(N)

    diag = A.diagonal().copy()
    diag[diag <= 0] = 1.0
    energies = []

    def record(x):
        v = project(x)
        energies.append(0.5 * v @ (A @ v) - b_proj @ v)

    x_start = np.zeros(N) if x0 is None else np.asarray(x0, dtype=float)

    def apply_A(x):
        return A @ x

    # residuals live in range(A) = {r : 1^T r = 0}; directions are kept M-mean-zero
    x, iters, converged = _pcg(
        apply_A, b_proj, x_start, diag, tol, max_iter,
        project=lambda y: project(y) if y is not None else y,
        on_iterate=record if debug else None)
    x = project(x)
    r = b_proj - A @ x
    nb = np.linalg.norm(b_proj)
    res = float(np.linalg.norm(project_residual(r)) / nb) if nb > 0 else 0.0
    report = SolveReport(
        solution=x,
        iterations=iters,
        algebraic_residual=res,
        compatibility_defect=float(compatibility_defect),
        mean_value=float(m1 @ x / area),
        flux_residual=None,
        energy=float(0.5 * x @ (A @ x) - b @ x),
        converged=converged,
        energies=energies,
    )
    if not converged:
        log.warning("Neumann CG did not converge in %d iterations (residual %.3g)", iters, res)
        if raise_on_failure:
            raise MaxIterExceeded(f"no convergence in {iters} iterations", report)
    return report


def _as_boundary_map(boundary_values):
    if hasattr(boundary_values, "items"):
        idx = np.array(sorted(boundary_values), dtype=np.int64)
        vals = np.array([boundary_values[i] for i in idx], dtype=float)
    else:
        idx, vals = boundary_values
        idx = np.asarray(idx, dtype=np.int64)
        vals = np.asarray(vals, dtype=float)
    return idx, vals


def solve_dirichlet(A, b, boundary_values, tol=DEFAULT_TOL, max_iter=None, mesh=None):
    """Solve A v = b with v prescribed on the given vertices.

    ``boundary_values`` is a mapping vertex -> value or a pair (indices, values).
    Returns a SurfaceField when ``mesh`` is given, else the nodal array.
    """
    A = A.tocsr()
    N = A.shape[0]
    b = np.zeros(N) if b is None else np.asarray(b, dtype=float)
    fixed, g = _as_boundary_map(boundary_values)
    if mesh is not None and not np.all(np.isin(mesh.boundary_vertices, fixed)):
        raise ValueError("boundary_values must cover every boundary vertex")
    free = np.setdiff1d(np.arange(N), fixed)
    v = np.zeros(N)
    v[fixed] = g
    if len(free):
        A_ii = A[free][:, free]
        rhs = b[free] - A[free][:, fixed] @ g
        diag = A_ii.diagonal()
        if np.any(diag <= 0):
            raise SingularInteriorBlock("non-positive diagonal in the interior block")
        max_iter = 10 * len(free) if max_iter is None else max_iter
        x, _, converged = _pcg(lambda y: A_ii @ y, rhs, np.zeros(len(free)), diag, tol, max_iter)
        if not converged:
            raise MaxIterExceeded("Dirichlet CG did not converge")
        v[free] = x
    return SurfaceField(mesh, v) if mesh is not None else v


def harmonic_extension(chart, mesh, trace, tol=DEFAULT_TOL):
    """Lift boundary data into U by the flat Laplacian: -Delta_X J = 0, J = trace on dU.

    The lift solves the planar problem on U whatever the chart; ``chart``
    only identifies the surface the returned field lives on. ``trace`` is a
    mapping vertex -> value or a pair (indices, values); a callable of X also works.
    """
    from .geometry import flat_chart

    if callable(trace):
        bv = mesh.boundary_vertices
        trace = (bv, trace(mesh.vertices[bv]))
    A_flat = assembly.stiffness(flat_chart(chart.domain), mesh, quadrature(2))
    return solve_dirichlet(A_flat, None, trace, tol=tol, mesh=mesh)


def boundary_edge_triangles(mesh):
    """Index of the triangle adjacent to each boundary edge."""
    t = mesh.triangles
    directed = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
    owner = np.concatenate([np.arange(len(t))] * 3)
    n = mesh.n_vertices
    key = directed[:, 0] * n + directed[:, 1]
    order = np.argsort(key)
    e = mesh.boundary_edges
    bkey = e[:, 0] * n + e[:, 1]
    pos = np.searchsorted(key[order], bkey)
    return owner[order][pos]


def conormal_derivative(chart, mesh, v):
    """nu . grad_G v per boundary edge, evaluated at the edge midpoint with the
    gradient of the adjacent triangle."""
    tri = boundary_edge_triangles(mesh)
    dv = assembly.parameter_gradients(mesh, v)[tri]
    e = mesh.boundary_edges
    Xm = 0.5 * (mesh.vertices[e[:, 0]] + mesh.vertices[e[:, 1]])
    J, _, g_upper, _, _, _ = _frame_arrays(chart, Xm)
    grad = np.einsum("eab,eai,eb->ei", g_upper, J, dv)
    nu, _ = conormal_from_normal(chart, Xm, mesh.boundary_normals)
    return np.einsum("ei,ei->e", nu, grad)


def flux_residual(chart, mesh, v):
    return assembly.boundary_lp_norm(chart, mesh, conormal_derivative(chart, mesh, v), 2)


def solve_conormal_problem(chart, mesh, F, quad=None, tol=DEFAULT_TOL, max_iter=None, *,
                           strict=False, compatibility_threshold=DEFAULT_COMPATIBILITY_THRESHOLD,
                           x0=None, operators=None):
    """Assemble and solve -Delta_G v = F, dv/dnu = 0 on a chart; fills every report field."""
    quad = quad or quadrature(4)
    if operators is None:
        operators = (assembly.stiffness(chart, mesh, quad), assembly.mass(chart, mesh, quad))
    A, M = operators
    b = assembly.load(chart, mesh, quad, F)
    defect = check_compatibility(chart, mesh, quad, F)
    report = solve_neumann(A, M, b, tol, max_iter, x0, strict=strict,
                           compatibility_threshold=compatibility_threshold,
                           compatibility_defect=defect)
    return replace(report, flux_residual=flux_residual(chart, mesh, report.solution))
