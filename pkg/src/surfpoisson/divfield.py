"""Construction of a surface vector field with prescribed surface divergence.

Given F and a normal component chi, solve the co-normal problem
-Delta_G v = F + chi H and set V = -grad_G v + chi n. Then div_G V = F in
the interior, V . n = chi, and V . nu = -dv/dnu = 0 on the boundary.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from . import assembly
from .assembly import SurfaceVectorField
from .geometry import _frame_arrays, mean_curvature
from .mesh import quadrature
from .solver import DEFAULT_COMPATIBILITY_THRESHOLD, DEFAULT_TOL, check_compatibility, solve_neumann


@dataclass
class DivSolveReport:
    V: SurfaceVectorField
    div_residual: float
    normal_residual: float
    conormal_residual: float
    compatibility_defect: float
    iterations: int = 0

    def to_dict(self):
        return {
            "div_residual": self.div_residual,
            "normal_residual": self.normal_residual,
            "conormal_residual": self.conormal_residual,
            "compatibility_defect": self.compatibility_defect,
            "iterations": self.iterations,
        }


def _evaluate(f, X):
    if f is None:
        return np.zeros(np.shape(X)[:-1])
    return np.broadcast_to(np.asarray(f(X), dtype=float), np.shape(X)[:-1])


def _patches(mesh, rings=2):
    """Vertex patches (CSR index arrays) reaching ``rings`` edges out."""
    N = mesh.n_vertices
    e = mesh.edges()
    adj = sp.coo_matrix((np.ones(2 * len(e)), (np.r_[e[:, 0], e[:, 1]], np.r_[e[:, 1], e[:, 0]])),
                        shape=(N, N)).tocsr() + sp.identity(N, format="csr")
    reach = adj
    for _ in range(rings - 1):
        reach = reach @ adj
    reach = reach.tocsr()
    reach.sort_indices()
    return reach.indptr, reach.indices


def recover_gradient(chart, mesh, v, method="lsq"):
    """Nodal tangential gradient of a P1 field.

    ``method='lsq'`` fits a quadratic to the nodal values on the two-ring
    patch of each vertex and differentiates it at the vertex (second order
    on boundary vertices as well). ``method='average'`` takes the
    surface-area weighted mean of the adjacent triangle gradients. Either
    way the parameter gradient is mapped through the metric at the vertex,
    so the result is exactly tangent there.
    """
    vals = np.asarray(v.values if hasattr(v, "values") else v, dtype=float)
    if method == "average":
        dv = assembly.parameter_gradients(mesh, vals)
        _, areas = mesh.gradients()
        Xc = mesh.vertices[mesh.triangles].mean(axis=1)
        w = np.repeat(areas * _frame_arrays(chart, Xc)[4], 3)
        idx = mesh.triangles.ravel()
        wsum = np.bincount(idx, weights=w, minlength=mesh.n_vertices)
        grad = np.stack([np.bincount(idx, weights=w * np.repeat(dv[:, a], 3),
                                     minlength=mesh.n_vertices) for a in range(2)], axis=1)
        grad /= wsum[:, None]
    elif method == "lsq":
        grad = _lsq_gradient(mesh, vals)
    else:
        raise ValueError(f"unknown recovery method {method!r}")
    J, _, g_upper, _, _, _ = _frame_arrays(chart, mesh.vertices)
    return np.einsum("nab,nai,nb->ni", g_upper, J, grad)


def _lsq_gradient(mesh, vals):
    indptr, indices = _patches(mesh, 2)
    X = mesh.vertices
    out = np.empty((mesh.n_vertices, 2))
    # group vertices by patch size so each group is one batched lstsq
    sizes = np.diff(indptr)
    for k in np.unique(sizes):
        verts = np.flatnonzero(sizes == k)
        nb = indices[indptr[verts][:, None] + np.arange(k)]
        scale = mesh.h
        D = (X[nb] - X[verts][:, None, :]) / scale
        x, y = D[..., 0], D[..., 1]
        V = np.stack([np.ones_like(x), x, y, x * x, x * y, y * y], axis=-1)
        rhs = vals[nb] - vals[verts][:, None]
        coef = np.linalg.pinv(V) @ rhs[..., None]
        out[verts] = coef[:, 1:3, 0] / scale
    return out


def _div_residual(chart, mesh, quad, V, F):
    div = assembly.surface_divergence(chart, mesh, V)  # (T,)
    X, _, _, sqrtG, _ = assembly._quad_geometry(chart, mesh, quad)
    _, areas = mesh.gradients()
    err = div[:, None] - _evaluate(F, X)
    return float(np.sqrt(np.einsum("q,tq,t->", quad.weights, err ** 2 * sqrtG, areas)))


def _normal_residual(chart, mesh, quad, V, chi):
    n = _frame_arrays(chart, mesh.vertices)[5]
    w = np.einsum("ni,ni->n", V, n) - _evaluate(chi, mesh.vertices)
    M = assembly.mass(chart, mesh, quad)
    return float(np.sqrt(max(w @ (M @ w), 0.0)))


def _conormal_residual(chart, mesh, V, n_gauss=4):
    _, t, w, nu, ds = assembly.boundary_geometry(chart, mesh, n_gauss)
    e = mesh.boundary_edges
    Vq = (V[e[:, 0], None, :] * (1.0 - t)[None, :, None]
          + V[e[:, 1], None, :] * t[None, :, None])
    vn = np.einsum("egi,egi->eg", Vq, nu)
    return float(np.sqrt(np.einsum("g,eg,eg->", w, ds, vn ** 2)))


def verify_div_system(chart, mesh, quad, V, F, chi):
    """(div_residual, normal_residual, conormal_residual) recomputed from V alone."""
    quad = quad or quadrature(4)
    vals = np.asarray(V.values if hasattr(V, "values") else V, dtype=float)
    return (_div_residual(chart, mesh, quad, vals, F),
            _normal_residual(chart, mesh, quad, vals, chi),
            _conormal_residual(chart, mesh, vals))


def solve_div_system(chart, mesh, quad, F, chi, tol=DEFAULT_TOL, *, strict=False,
                     compatibility_threshold=DEFAULT_COMPATIBILITY_THRESHOLD, max_iter=None):
    """Build V with div_G V = F, V . n = chi and V . nu = 0 on the boundary.

    F and chi are callables of parameter points (None means zero). The load
    F + chi H is integrated with the analytic mean curvature of the chart.
    """
    quad = quad or quadrature(4)

    def load_fn(X):
        return _evaluate(F, X) + _evaluate(chi, X) * mean_curvature(chart, X)

    A = assembly.stiffness(chart, mesh, quad)
    M = assembly.mass(chart, mesh, quad)
    b = assembly.load(chart, mesh, quad, load_fn)
    defect = check_compatibility(chart, mesh, quad, load_fn)
    rep = solve_neumann(A, M, b, tol, max_iter, strict=strict,
                        compatibility_threshold=compatibility_threshold,
                        compatibility_defect=defect)
    n = _frame_arrays(chart, mesh.vertices)[5]
    V = -recover_gradient(chart, mesh, rep.solution) + _evaluate(chi, mesh.vertices)[:, None] * n
    field = SurfaceVectorField(mesh, V)
    div_r, normal_r, conormal_r = verify_div_system(chart, mesh, quad, field, F, chi)
    return DivSolveReport(field, div_r, normal_r, conormal_r, float(defect), rep.iterations)


def export_vector_csv(field, path, header=None):
    """Write (vertex_id, V1, V2, V3) rows."""
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(f"# {header}\n")
        w = csv.writer(fh)
        w.writerow(["vertex_id", "V1", "V2", "V3"])
        for i, row in enumerate(np.asarray(field.values)):
            w.writerow([i] + [repr(float(x)) for x in row])
