"""Triangulations of the parameter domain and triangle quadrature."""
from __future__ import annotations

import csv
import os
from dataclasses import dataclass

import numpy as np

from .errors import MeshFailure, UnsupportedOrder

MIN_ANGLE_DEG = 20.0
MAX_EDGE_FACTOR = 1.5


@dataclass(frozen=True)
class ParamMesh:
    """Straight-edged triangulation of U.

    ``boundary_edges[k] = (i, j)`` is oriented counterclockwise (domain on
    the left), ``boundary_normals[k]`` is the outward unit normal of the
    straight edge, and ``boundary_arc[k]`` the boundary parameter of its
    midpoint.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_normals: np.ndarray
    boundary_arc: np.ndarray
    boundary_flags: np.ndarray

    def __post_init__(self):
        for name in ("vertices", "triangles", "boundary_edges", "boundary_normals",
                     "boundary_arc", "boundary_flags"):
            arr = np.array(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)

    @property
    def n_vertices(self):
        return len(self.vertices)

    @property
    def n_triangles(self):
        return len(self.triangles)

    @property
    def boundary_vertices(self):
        return np.flatnonzero(self.boundary_flags)

    @property
    def interior_vertices(self):
        return np.flatnonzero(~self.boundary_flags)

    def signed_areas(self):
        P = self.vertices[self.triangles]
        d1 = P[:, 1] - P[:, 0]
        d2 = P[:, 2] - P[:, 0]
        return 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])

    def edges(self):
        e = np.sort(self.triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
        return np.unique(e, axis=0)

    def edge_lengths(self):
        e = self.edges()
        return np.linalg.norm(self.vertices[e[:, 0]] - self.vertices[e[:, 1]], axis=1)

    def min_angle(self):
        """Smallest interior angle over all triangles, in degrees."""
        P = self.vertices[self.triangles]
        angles = []
        for k in range(3):
            u = P[:, (k + 1) % 3] - P[:, k]
            v = P[:, (k + 2) % 3] - P[:, k]
            c = np.einsum("ij,ij->i", u, v) / (np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1))
            angles.append(np.degrees(np.arccos(np.clip(c, -1.0, 1.0))))
        return float(np.min(angles))

    @property
    def h(self):
        return float(self.edge_lengths().max())

    def gradients(self):
        """Constant parameter-space gradients of the three hat functions per triangle.

        Returns ``(grads, areas)`` with grads of shape (T, 3, 2).
        """
        P = self.vertices[self.triangles]
        d1 = P[:, 1] - P[:, 0]
        d2 = P[:, 2] - P[:, 0]
        det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        inv = np.empty((len(P), 2, 2))
        inv[:, 0, 0] = d2[:, 1] / det
        inv[:, 0, 1] = -d2[:, 0] / det
        inv[:, 1, 0] = -d1[:, 1] / det
        inv[:, 1, 1] = d1[:, 0] / det
        # rows of inv are grad(lambda_1), grad(lambda_2)
        grads = np.empty((len(P), 3, 2))
        grads[:, 1] = inv[:, 0]
        grads[:, 2] = inv[:, 1]
        grads[:, 0] = -grads[:, 1] - grads[:, 2]
        return grads, 0.5 * det

    def permuted(self, perm):
        """Same mesh with triangles reordered (used for order-independence checks)."""
        return ParamMesh(self.vertices, self.triangles[perm], self.boundary_edges,
                         self.boundary_normals, self.boundary_arc, self.boundary_flags)


def _edge_data(vertices, edges, domain):
    a = vertices[edges[:, 0]]
    b = vertices[edges[:, 1]]
    d = b - a
    normals = np.stack([d[:, 1], -d[:, 0]], axis=1)
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    arc = domain.boundary_parameter(0.5 * (a + b))
    return normals, arc


def _boundary_edges_from_triangles(triangles):
    directed = triangles[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2)
    key = np.sort(directed, axis=1)
    _, inv, counts = np.unique(key, axis=0, return_inverse=True, return_counts=True)
    return directed[counts[inv.ravel()] == 1]


def build_mesh(vertices, triangles, domain):
    """Assemble a ParamMesh from raw arrays, deriving all boundary data."""
    vertices = np.asarray(vertices, dtype=float)
    triangles = np.asarray(triangles, dtype=np.int64)
    bedges = _boundary_edges_from_triangles(triangles)
    # order edges along the boundary loop for readability of exports
    order = np.argsort(domain.boundary_parameter(
        0.5 * (vertices[bedges[:, 0]] + vertices[bedges[:, 1]])), kind="stable")
    bedges = bedges[order]
    normals, arc = _edge_data(vertices, bedges, domain)
    flags = np.zeros(len(vertices), dtype=bool)
    flags[bedges.ravel()] = True
    return ParamMesh(vertices, triangles, bedges, normals, arc, flags)


def _ring_mesh_unit(n_rings):
    """Unit-disk mesh with rings at radii k/n_rings and 6k points on ring k."""
    verts = [np.zeros((1, 2))]
    rings = [np.array([0])]
    start = 1
    for k in range(1, n_rings + 1):
        m = 6 * k
        th = 2.0 * np.pi * np.arange(m) / m
        r = k / n_rings
        verts.append(np.stack([r * np.cos(th), r * np.sin(th)], axis=1))
        rings.append(np.arange(start, start + m))
        start += m
    verts = np.vstack(verts)
    tris = []
    inner0 = rings[1]
    for i in range(6):
        tris.append((0, inner0[i], inner0[(i + 1) % 6]))
    for k in range(2, n_rings + 1):
        inner, outer = rings[k - 1], rings[k]
        tris.extend(_zip_rings(inner, outer, verts))
    return verts, np.array(tris, dtype=np.int64)


def _zip_rings(inner, outer, verts):
    """Triangulate the annulus between two angle-sorted rings, always closing
    the current front with the shorter of the two candidate diagonals."""
    angles = np.mod(np.arctan2(verts[:, 1], verts[:, 0]), 2.0 * np.pi)
    inner = np.roll(inner, -int(np.argmin(angles[inner])))
    outer = np.roll(outer, -int(np.argmin(angles[outer])))
    ni, no = len(inner), len(outer)
    tris = []
    i = o = 0
    while i < ni or o < no:
        vi, vo = inner[i % ni], outer[o % no]
        if i >= ni:
            advance_outer = True
        elif o >= no:
            advance_outer = False
        else:
            d_outer = np.linalg.norm(verts[vi] - verts[outer[(o + 1) % no]])
            d_inner = np.linalg.norm(verts[inner[(i + 1) % ni]] - verts[vo])
            advance_outer = d_outer < d_inner
        if advance_outer:
            tris.append((vi, vo, outer[(o + 1) % no]))
            o += 1
        else:
            tris.append((vi, vo, inner[(i + 1) % ni]))
            i += 1
    return tris


def generate_mesh(domain, h):
    """Structured ring mesh of ``domain`` with target edge length ``h``."""
    if not 0 < h < domain.diameter:
        raise MeshFailure(f"h={h} outside (0, diameter={domain.diameter})")
    a, b = domain.semi_axes
    n_rings = max(1, int(np.ceil(max(a, b) / h)))
    unit, tris = _ring_mesh_unit(n_rings)
    verts = np.asarray(domain.center) + unit * np.array([a, b])
    boundary = np.isclose(np.hypot(unit[:, 0], unit[:, 1]), 1.0)
    verts[boundary] = domain.project(verts[boundary])
    mesh = build_mesh(verts, tris, domain)
    _check_quality(mesh, h)
    return mesh


def _check_quality(mesh, h):
    if np.any(mesh.signed_areas() <= 0):
        raise MeshFailure("mesh contains inverted or degenerate triangles")
    if mesh.h > MAX_EDGE_FACTOR * h:
        raise MeshFailure(f"max edge {mesh.h:.4g} exceeds {MAX_EDGE_FACTOR} h")
    if mesh.min_angle() < MIN_ANGLE_DEG:
        raise MeshFailure(f"min angle {mesh.min_angle():.2f} deg below {MIN_ANGLE_DEG}")


def refine(mesh, domain):
    """Uniform red refinement; new boundary midpoints are projected onto dU."""
    edges = mesh.edges()
    nv = mesh.n_vertices
    mid = 0.5 * (mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]])
    bkey = np.sort(mesh.boundary_edges, axis=1)
    is_bnd = np.zeros(len(edges), dtype=bool)
    pos = _row_index(edges, bkey)
    is_bnd[pos] = True
    mid[is_bnd] = domain.project(mid[is_bnd])
    verts = np.vstack([mesh.vertices, mid])
    t = mesh.triangles
    e01 = nv + _row_index(edges, np.sort(t[:, [0, 1]], axis=1))
    e12 = nv + _row_index(edges, np.sort(t[:, [1, 2]], axis=1))
    e20 = nv + _row_index(edges, np.sort(t[:, [2, 0]], axis=1))
    tris = np.concatenate([
        np.stack([t[:, 0], e01, e20], axis=1),
        np.stack([e01, t[:, 1], e12], axis=1),
        np.stack([e20, e12, t[:, 2]], axis=1),
        np.stack([e01, e12, e20], axis=1),
    ])
    return build_mesh(verts, tris, domain)


def _row_index(table, rows):
    """Index of each row of ``rows`` in the lexicographically sorted ``table``."""
    n = int(max(table.max(), rows.max())) + 1
    tkey = table[:, 0] * n + table[:, 1]
    rkey = rows[:, 0] * n + rows[:, 1]
    idx = np.searchsorted(tkey, rkey)
    if np.any(tkey[np.minimum(idx, len(tkey) - 1)] != rkey):
        raise MeshFailure("edge lookup failed")
    return idx


def refinement_sequence(domain, h0, levels):
    """``levels`` meshes: generate at h0, then refine uniformly."""
    meshes = [generate_mesh(domain, h0)]
    for _ in range(levels - 1):
        meshes.append(refine(meshes[-1], domain))
    return meshes


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureRule:
    """Barycentric points (q, 3) and weights summing to 1.

    The integral over a triangle T is |T| * sum_q w_q f(x_q).
    """

    points: np.ndarray
    weights: np.ndarray
    order: int


def _perm3(a, b, c):
    return [(a, b, c), (b, c, a), (c, a, b)]


def _perm6(a, b, c):
    return _perm3(a, b, c) + _perm3(a, c, b)


def quadrature(order=4):
    if order == 1:
        pts = [(1 / 3, 1 / 3, 1 / 3)]
        w = [1.0]
    elif order == 2:
        pts = _perm3(2 / 3, 1 / 6, 1 / 6)
        w = [1 / 3] * 3
    elif order == 3:
        # Strang-Fix 6-point rule, all weights positive
        pts = _perm6(0.659027622374092, 0.231933368553031, 0.109039009072877)
        w = [1 / 6] * 6
    elif order == 4:
        a, wa = 0.445948490915965, 0.223381589678011
        b, wb = 0.091576213509771, 0.109951743655322
        pts = _perm3(1 - 2 * a, a, a) + _perm3(1 - 2 * b, b, b)
        w = [wa] * 3 + [wb] * 3
    else:
        raise UnsupportedOrder(f"quadrature order {order} not in {{1, 2, 3, 4}}")
    w = np.array(w)
    return QuadratureRule(np.array(pts), w / w.sum(), order)


def quadrature_points(mesh, quad):
    """Parameter-space quadrature points, shape (T, q, 2)."""
    P = mesh.vertices[mesh.triangles]
    return np.einsum("qk,tkd->tqd", quad.points, P)


def edge_gauss(n=4):
    """Gauss-Legendre nodes/weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


# ---------------------------------------------------------------------------
# CSV export / import
# ---------------------------------------------------------------------------

def export_csv(mesh, directory, header=None):
    os.makedirs(directory, exist_ok=True)

    def _write(name, cols, rows):
        with open(os.path.join(directory, name), "w", newline="") as fh:
            if header:
                fh.write(f"# {header}\n")
            w = csv.writer(fh)
            w.writerow(cols)
            w.writerows(rows)

    _write("vertices.csv", ["vertex_id", "X1", "X2", "boundary"],
           ([i, repr(float(x)), repr(float(y)), int(f)]
            for i, ((x, y), f) in enumerate(zip(mesh.vertices, mesh.boundary_flags))))
    _write("triangles.csv", ["triangle_id", "v0", "v1", "v2"],
           ([i, *map(int, t)] for i, t in enumerate(mesh.triangles)))
    _write("boundary.csv", ["edge_id", "v0", "v1", "n1", "n2", "s"],
           ([i, int(e[0]), int(e[1]), repr(float(n[0])), repr(float(n[1])), repr(float(s))]
            for i, (e, n, s) in enumerate(zip(mesh.boundary_edges, mesh.boundary_normals,
                                              mesh.boundary_arc))))


def _read(path):
    with open(path, newline="") as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    return rows[1:]


def import_csv(directory):
    v = _read(os.path.join(directory, "vertices.csv"))
    t = _read(os.path.join(directory, "triangles.csv"))
    b = _read(os.path.join(directory, "boundary.csv"))
    vertices = np.array([[float(r[1]), float(r[2])] for r in v])
    flags = np.array([bool(int(r[3])) for r in v])
    triangles = np.array([[int(x) for x in r[1:4]] for r in t], dtype=np.int64)
    edges = np.array([[int(r[1]), int(r[2])] for r in b], dtype=np.int64)
    normals = np.array([[float(r[3]), float(r[4])] for r in b])
    arc = np.array([float(r[5]) for r in b])
    return ParamMesh(vertices, triangles, edges, normals, arc, flags)
