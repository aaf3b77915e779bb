"""P1 finite element operators on the surface, computed in parameter coordinates.

Every integral over the surface is pulled back to U with the area weight
sqrt(G); integrals over the boundary curve use the line element
|n1^U g2 - n2^U g1| along the straight boundary edges of the mesh.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .geometry import _frame_arrays, conormal_from_normal
from .mesh import edge_gauss, quadrature, quadrature_points


@dataclass(frozen=True)
class SurfaceField:
    """Nodal P1 values of a scalar field on the surface, indexed by mesh vertex."""

    mesh: object
    values: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (self.mesh.n_vertices,):
            raise ValueError(f"expected {self.mesh.n_vertices} nodal values, got {vals.shape}")
        object.__setattr__(self, "values", vals)

    def __array__(self, dtype=None, copy=None):
        return self.values if dtype is None else self.values.astype(dtype)


@dataclass(frozen=True)
class SurfaceVectorField:
    """Three-component field; ``values`` is (N, 3) nodal or (T, 3) per triangle."""

    mesh: object
    values: np.ndarray
    per_triangle: bool = False

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=float)
        n = self.mesh.n_triangles if self.per_triangle else self.mesh.n_vertices
        if vals.shape != (n, 3):
            raise ValueError(f"expected shape {(n, 3)}, got {vals.shape}")
        object.__setattr__(self, "values", vals)

    def component(self, j):
        if self.per_triangle:
            raise ValueError("per-triangle fields have no nodal components")
        return SurfaceField(self.mesh, self.values[:, j])


def _nodal(v):
    return np.asarray(v.values if hasattr(v, "values") else v, dtype=float)


def _quad_geometry(chart, mesh, quad):
    X = quadrature_points(mesh, quad)
    J, _, g_upper, _, sqrtG, n = _frame_arrays(chart, X)
    return X, J, g_upper, sqrtG, n


def _centroid_geometry(chart, mesh):
    Xc = mesh.vertices[mesh.triangles].mean(axis=1)
    J, _, g_upper, _, sqrtG, n = _frame_arrays(chart, Xc)
    return Xc, J, g_upper, sqrtG, n


def _assemble(mesh, local):
    t = mesh.triangles
    rows = np.repeat(t, 3, axis=1).ravel()
    cols = np.tile(t, (1, 3)).ravel()
    N = mesh.n_vertices
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(N, N)).tocsr()


def stiffness(chart, mesh, quad=None):
    """A_ij = int_U g^{ab} d_a phi_i d_b phi_j sqrt(G) dX."""
    quad = quad or quadrature(4)
    grads, areas = mesh.gradients()
    _, _, g_upper, sqrtG, _ = _quad_geometry(chart, mesh, quad)
    K = np.einsum("q,tqab,tq->tab", quad.weights, g_upper, sqrtG) * areas[:, None, None]
    local = np.einsum("tia,tab,tjb->tij", grads, K, grads)
    return _assemble(mesh, local)


def mass(chart, mesh, quad=None):
    """M_ij = int_U phi_i phi_j sqrt(G) dX."""
    quad = quad or quadrature(4)
    _, areas = mesh.gradients()
    _, _, _, sqrtG, _ = _quad_geometry(chart, mesh, quad)
    phi = quad.points
    local = np.einsum("q,qi,qj,tq->tij", quad.weights, phi, phi, sqrtG) * areas[:, None, None]
    return _assemble(mesh, local)


def load(chart, mesh, quad, F):
    """b_i = int_U F(X) phi_i sqrt(G) dX; ``F`` is any callable of parameter points."""
    quad = quad or quadrature(4)
    X, _, _, sqrtG, _ = _quad_geometry(chart, mesh, quad)
    _, areas = mesh.gradients()
    vals = np.broadcast_to(F(X), sqrtG.shape)
    local = np.einsum("q,qi,tq->ti", quad.weights, quad.points, vals * sqrtG) * areas[:, None]
    return np.bincount(mesh.triangles.ravel(), weights=local.ravel(), minlength=mesh.n_vertices)


def integrate(chart, mesh, quad, f, weight="surface"):
    """int f dH^2 (``weight='surface'``) or int_U f dX (``weight='parameter'``)."""
    quad = quad or quadrature(4)
    X, _, _, sqrtG, _ = _quad_geometry(chart, mesh, quad)
    _, areas = mesh.gradients()
    vals = np.broadcast_to(f(X), sqrtG.shape)
    w = sqrtG if weight == "surface" else 1.0
    return float(np.einsum("q,tq,t->", quad.weights, vals * w, areas))


def boundary_geometry(chart, mesh, n_gauss=4):
    """Gauss data on the straight boundary edges.

    Returns ``(X, t, w, nu, ds)``: points (E, g, 2), edge coordinates t in
    [0, 1], weights (g,), co-normals (E, g, 3), and line-element weights
    (E, g) such that the boundary integral of f is sum(w * ds * f).
    """
    t, w = edge_gauss(n_gauss)
    e = mesh.boundary_edges
    a = mesh.vertices[e[:, 0]]
    b = mesh.vertices[e[:, 1]]
    X = a[:, None, :] + t[None, :, None] * (b - a)[:, None, :]
    nU = np.broadcast_to(mesh.boundary_normals[:, None, :], X.shape)
    nu, speed = conormal_from_normal(chart, X, nU)
    length = np.linalg.norm(b - a, axis=1)
    return X, t, w, nu, speed * length[:, None]


def boundary_integrate(chart, mesh, f, n_gauss=4):
    """Line integral over the boundary curve of f(X, nu)."""
    X, _, w, nu, ds = boundary_geometry(chart, mesh, n_gauss)
    return float(np.einsum("g,eg,eg->", w, ds, f(X, nu)))


def boundary_mass(chart, mesh, n_gauss=4):
    """Boundary mass matrix on the boundary vertices only.

    Rows and columns follow ``mesh.boundary_vertices`` (ascending vertex id).
    """
    _, t, w, _, ds = boundary_geometry(chart, mesh, n_gauss)
    phi = np.stack([1.0 - t, t], axis=1)
    local = np.einsum("g,gi,gj,eg->eij", w, phi, phi, ds)
    bverts = mesh.boundary_vertices
    index = -np.ones(mesh.n_vertices, dtype=np.int64)
    index[bverts] = np.arange(len(bverts))
    e = index[mesh.boundary_edges]
    rows = np.repeat(e, 2, axis=1).ravel()
    cols = np.tile(e, (1, 2)).ravel()
    nb = len(bverts)
    return sp.coo_matrix((local.ravel(), (rows, cols)), shape=(nb, nb)).tocsr()


def parameter_gradients(mesh, v):
    """Piecewise-constant d v / dX per triangle, shape (T, 2) (or (T, k, 2) for (N, k) input)."""
    grads, _ = mesh.gradients()
    vals = _nodal(v)[mesh.triangles]
    if vals.ndim == 2:
        return np.einsum("ti,tia->ta", vals, grads)
    return np.einsum("tik,tia->tka", vals, grads)


def tangential_gradient(chart, mesh, v):
    """grad_G v = g^{ab} g_a d_b v, evaluated per triangle at the centroid."""
    dv = parameter_gradients(mesh, v)
    _, J, g_upper, _, _ = _centroid_geometry(chart, mesh)
    vec = np.einsum("tab,tai,tb->ti", g_upper, J, dv)
    return SurfaceVectorField(mesh, vec, per_triangle=True)


def surface_divergence(chart, mesh, f):
    """div_G f = sum_j g^{ab} (g_a)_j d_b f_j per triangle, for nodal f of shape (N, 3)."""
    df = parameter_gradients(mesh, _nodal(f))  # (T, 3, 2)
    _, J, g_upper, _, _ = _centroid_geometry(chart, mesh)
    return np.einsum("tab,taj,tjb->t", g_upper, J, df)


def interpolate(mesh, quad, v):
    """Nodal values -> values at quadrature points, shape (T, q[, k])."""
    vals = _nodal(v)[mesh.triangles]
    if vals.ndim == 2:
        return np.einsum("qi,ti->tq", quad.points, vals)
    return np.einsum("qi,tik->tqk", quad.points, vals)


def lp_norm(chart, mesh, quad, field, p=2.0, weight="surface"):
    """||v||_{L^p} of a nodal field; ``weight='parameter'`` gives the flat norm on U."""
    quad = quad or quadrature(4)
    if p < 1:
        raise ValueError("p must be >= 1")
    vq = np.abs(interpolate(mesh, quad, field)) ** p
    _, _, _, sqrtG, _ = _quad_geometry(chart, mesh, quad)
    _, areas = mesh.gradients()
    w = sqrtG if weight == "surface" else 1.0
    return float(np.einsum("q,tq,t->", quad.weights, vq * w, areas)) ** (1.0 / p)


def h1_seminorm(chart, mesh, quad, field):
    """||grad_G v||_{L^2} by direct quadrature (independent of the assembled matrix)."""
    quad = quad or quadrature(4)
    dv = parameter_gradients(mesh, field)
    _, areas = mesh.gradients()
    _, _, g_upper, sqrtG, _ = _quad_geometry(chart, mesh, quad)
    dens = np.einsum("tqab,ta,tb->tq", g_upper, dv, dv) * sqrtG
    return float(np.sqrt(max(np.einsum("q,tq,t->", quad.weights, dens, areas), 0.0)))


def w12_norm(chart, mesh, quad, field):
    return float(np.hypot(lp_norm(chart, mesh, quad, field, 2), h1_seminorm(chart, mesh, quad, field)))


def boundary_lp_norm(chart, mesh, values, p=2.0, n_gauss=4):
    """||v||_{L^p(boundary)} for nodal values (length N, linear along edges)
    or per-edge constants (length E)."""
    vals = np.asarray(values, dtype=float)
    _, t, w, _, ds = boundary_geometry(chart, mesh, n_gauss)
    if vals.shape == (mesh.n_vertices,):
        e = mesh.boundary_edges
        vq = vals[e[:, 0], None] * (1.0 - t) + vals[e[:, 1], None] * t
    elif vals.shape == (len(mesh.boundary_edges),):
        vq = np.broadcast_to(vals[:, None], ds.shape)
    else:
        raise ValueError("values must be nodal or per boundary edge")
    return float(np.einsum("g,eg,eg->", w, ds, np.abs(vq) ** p)) ** (1.0 / p)


def is_symmetric(op, tol=1e-12):
    diff = abs(op - op.T)
    scale = max(abs(op).max(), 1e-300)
    return diff.max() <= tol * scale if diff.nnz else True


def export_operator_csv(op, path, header=None):
    """Write a sparse operator as (row, col, value) triples."""
    coo = sp.coo_matrix(op)
    order = np.lexsort((coo.col, coo.row))
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(f"# {header}\n")
        w = csv.writer(fh)
        w.writerow(["row", "col", "value"])
        for k in order:
            w.writerow([int(coo.row[k]), int(coo.col[k]), repr(float(coo.data[k]))])
