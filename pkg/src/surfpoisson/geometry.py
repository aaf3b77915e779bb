"""Pointwise differential geometry of a chart x(X) over a planar domain U.

All evaluators are vectorized: a point argument of shape ``(..., 2)`` yields
outputs with the same leading shape. Conventions:

* ``jacobian(X)[..., a, :]`` is the tangent vector g_a = dx/dX_a.
* ``hessian(X)[..., a, b, :]`` is d^2 x / dX_a dX_b.
* The unit normal is n = (g1 x g2) / |g1 x g2|; the mean curvature
  H = -div_G n carries its sign relative to this choice.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DegenerateMetric, ZeroTangent

DEFAULT_LAMBDA_MIN_FLOOR = 1e-8


# ---------------------------------------------------------------------------
# planar domains
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DomainSpec:
    """Disk or ellipse in the parameter plane.

    ``kind='disk'`` uses ``radius``; ``kind='ellipse'`` uses semi-axes ``a``
    (along X1) and ``b`` (along X2).
    """

    kind: str = "disk"
    radius: float = 1.0
    a: float = 1.0
    b: float = 1.0
    center: tuple = (0.0, 0.0)

    def __post_init__(self):
        if self.kind not in ("disk", "ellipse"):
            raise ValueError(f"unknown domain kind {self.kind!r}")
        if self.kind == "disk" and not self.radius > 0:
            raise ValueError("disk radius must be positive")
        if self.kind == "ellipse" and not (self.a > 0 and self.b > 0):
            raise ValueError("ellipse semi-axes must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in self.center))

    @classmethod
    def disk(cls, radius=1.0, center=(0.0, 0.0)):
        return cls(kind="disk", radius=float(radius), center=center)

    @classmethod
    def ellipse(cls, a, b, center=(0.0, 0.0)):
        return cls(kind="ellipse", a=float(a), b=float(b), center=center)

    @property
    def semi_axes(self):
        if self.kind == "disk":
            return self.radius, self.radius
        return self.a, self.b

    @property
    def diameter(self):
        return 2.0 * max(self.semi_axes)

    @property
    def area(self):
        a, b = self.semi_axes
        return np.pi * a * b

    def boundary_point(self, s):
        """Point of dU at angle parameter s."""
        a, b = self.semi_axes
        s = np.asarray(s, dtype=float)
        return np.stack([self.center[0] + a * np.cos(s),
                         self.center[1] + b * np.sin(s)], axis=-1)

    def boundary_normal(self, s):
        """Outward unit normal n^U at parameter s."""
        a, b = self.semi_axes
        s = np.asarray(s, dtype=float)
        nu = np.stack([b * np.cos(s), a * np.sin(s)], axis=-1)
        return nu / np.linalg.norm(nu, axis=-1, keepdims=True)

    def boundary_speed(self, s):
        a, b = self.semi_axes
        s = np.asarray(s, dtype=float)
        return np.hypot(a * np.sin(s), b * np.cos(s))

    def boundary_parameter(self, X):
        a, b = self.semi_axes
        X = np.asarray(X, dtype=float)
        return np.arctan2((X[..., 1] - self.center[1]) / b,
                          (X[..., 0] - self.center[0]) / a)

    def level(self, X):
        """Scaled radius: 1 on dU, < 1 inside."""
        a, b = self.semi_axes
        X = np.asarray(X, dtype=float)
        return np.hypot((X[..., 0] - self.center[0]) / a,
                        (X[..., 1] - self.center[1]) / b)

    def project(self, X):
        """Radially project points onto dU (along rays from the center)."""
        X = np.asarray(X, dtype=float)
        c = np.asarray(self.center)
        return c + (X - c) / self.level(X)[..., None]

    def from_polar(self, rho, theta):
        """Map scaled polar coordinates (rho in [0, 1]) into U."""
        a, b = self.semi_axes
        rho = np.asarray(rho, dtype=float)
        theta = np.asarray(theta, dtype=float)
        return np.stack([self.center[0] + a * rho * np.cos(theta),
                         self.center[1] + b * rho * np.sin(theta)], axis=-1)

    def to_dict(self):
        d = {"kind": self.kind, "center": list(self.center)}
        if self.kind == "disk":
            d["radius"] = self.radius
        else:
            d["a"], d["b"] = self.a, self.b
        return d


# ---------------------------------------------------------------------------
# charts
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Chart:
    """A parametrization x: U -> R^3 with analytic first and second derivatives."""

    domain: DomainSpec
    position: Callable = field(repr=False)
    jacobian: Callable = field(repr=False)
    hessian: Callable = field(repr=False)
    catalog_id: tuple = ("custom",)
    lambda_min_floor: float = DEFAULT_LAMBDA_MIN_FLOOR

    @property
    def kind(self):
        return self.catalog_id[0]


def _xy(X):
    X = np.asarray(X, dtype=float)
    return X[..., 0], X[..., 1]


def flat_chart(domain=None):
    domain = domain or DomainSpec.disk()

    def position(X):
        x1, x2 = _xy(X)
        return np.stack([x1, x2, np.zeros_like(x1)], axis=-1)

    def jacobian(X):
        x1, _ = _xy(X)
        J = np.zeros(x1.shape + (2, 3))
        J[..., 0, 0] = 1.0
        J[..., 1, 1] = 1.0
        return J

    def hessian(X):
        x1, _ = _xy(X)
        return np.zeros(x1.shape + (2, 2, 3))

    return Chart(domain, position, jacobian, hessian, ("flat",))


def cylinder_chart(domain=None, radius=1.0):
    """x = (R cos X1, R sin X1, X2); with R = 1 the metric is the identity."""
    domain = domain or DomainSpec.disk()
    R = float(radius)

    def position(X):
        x1, x2 = _xy(X)
        return np.stack([R * np.cos(x1), R * np.sin(x1), x2], axis=-1)

    def jacobian(X):
        x1, _ = _xy(X)
        J = np.zeros(x1.shape + (2, 3))
        J[..., 0, 0] = -R * np.sin(x1)
        J[..., 0, 1] = R * np.cos(x1)
        J[..., 1, 2] = 1.0
        return J

    def hessian(X):
        x1, _ = _xy(X)
        Hs = np.zeros(x1.shape + (2, 2, 3))
        Hs[..., 0, 0, 0] = -R * np.cos(x1)
        Hs[..., 0, 0, 1] = -R * np.sin(x1)
        return Hs

    return Chart(domain, position, jacobian, hessian, ("cylinder", R))


def _graph_chart(domain, z, zx, zy, zxx, zxy, zyy, catalog_id):
    def position(X):
        x1, x2 = _xy(X)
        return np.stack([x1, x2, z(x1, x2)], axis=-1)

    def jacobian(X):
        x1, x2 = _xy(X)
        J = np.zeros(x1.shape + (2, 3))
        J[..., 0, 0] = 1.0
        J[..., 1, 1] = 1.0
        J[..., 0, 2] = zx(x1, x2)
        J[..., 1, 2] = zy(x1, x2)
        return J

    def hessian(X):
        x1, x2 = _xy(X)
        Hs = np.zeros(x1.shape + (2, 2, 3))
        Hs[..., 0, 0, 2] = zxx(x1, x2)
        Hs[..., 0, 1, 2] = Hs[..., 1, 0, 2] = zxy(x1, x2)
        Hs[..., 1, 1, 2] = zyy(x1, x2)
        return Hs

    return Chart(domain, position, jacobian, hessian, catalog_id)


def hemisphere_chart(R=2.0, patch_radius=1.0, center=(0.0, 0.0)):
    """Upper spherical cap as a graph z = sqrt(R^2 - r^2) over a disk of radius rho < R."""
    R = float(R)
    rho = float(patch_radius)
    if not 0 < rho < R:
        raise ValueError("hemisphere chart needs 0 < patch_radius < R")
    domain = DomainSpec.disk(rho, center)
    cx, cy = domain.center

    def w(x, y):
        return np.sqrt(R * R - (x - cx) ** 2 - (y - cy) ** 2)

    def z(x, y):
        return w(x, y)

    def zx(x, y):
        return -(x - cx) / w(x, y)

    def zy(x, y):
        return -(y - cy) / w(x, y)

    def zxx(x, y):
        return -(R * R - (y - cy) ** 2) / w(x, y) ** 3

    def zxy(x, y):
        return -(x - cx) * (y - cy) / w(x, y) ** 3

    def zyy(x, y):
        return -(R * R - (x - cx) ** 2) / w(x, y) ** 3

    return _graph_chart(domain, z, zx, zy, zxx, zxy, zyy, ("hemisphere", R, rho))


def monge_chart(coefficients, domain=None):
    """Polynomial graph z = sum c_ij X1^i X2^j with i + j <= 4.

    ``coefficients`` maps (i, j) -> c_ij (a dict, or an iterable of
    ``(i, j, c)`` triples).
    """
    domain = domain or DomainSpec.disk()
    if isinstance(coefficients, dict):
        terms = [(int(i), int(j), float(c)) for (i, j), c in coefficients.items()]
    else:
        terms = [(int(i), int(j), float(c)) for i, j, c in coefficients]
    for i, j, _ in terms:
        if i < 0 or j < 0 or i + j > 4:
            raise ValueError(f"monge term X1^{i} X2^{j} exceeds degree 4")

    def _poly(dx, dy):
        def f(x, y):
            out = np.zeros(np.broadcast(x, y).shape)
            for i, j, c in terms:
                if i < dx or j < dy:
                    continue
                ci = c
                for k in range(dx):
                    ci *= i - k
                for k in range(dy):
                    ci *= j - k
                out = out + ci * x ** (i - dx) * y ** (j - dy)
            return out
        return f

    return _graph_chart(domain, _poly(0, 0), _poly(1, 0), _poly(0, 1),
                        _poly(2, 0), _poly(1, 1), _poly(0, 2),
                        ("monge",) + tuple(terms))


def pinched_chart(domain=None):
    """x = (X1, X2^3, 0): g2 vanishes on the line X2 = 0 (degenerate test chart)."""
    domain = domain or DomainSpec.disk()

    def position(X):
        x1, x2 = _xy(X)
        return np.stack([x1, x2 ** 3, np.zeros_like(x1)], axis=-1)

    def jacobian(X):
        x1, x2 = _xy(X)
        J = np.zeros(x1.shape + (2, 3))
        J[..., 0, 0] = 1.0
        J[..., 1, 1] = 3.0 * x2 ** 2
        return J

    def hessian(X):
        x1, x2 = _xy(X)
        Hs = np.zeros(x1.shape + (2, 2, 3))
        Hs[..., 1, 1, 1] = 6.0 * x2
        return Hs

    return Chart(domain, position, jacobian, hessian, ("pinched",))


CHART_KINDS = ("flat", "monge", "hemisphere", "cylinder", "pinched")


def make_chart(kind, params=None, domain=None):
    """Build a catalog chart by name. ``domain`` is ignored for ``hemisphere``."""
    params = dict(params or {})
    if kind == "flat":
        return flat_chart(domain)
    if kind == "cylinder":
        return cylinder_chart(domain, radius=params.get("radius", 1.0))
    if kind == "hemisphere":
        center = domain.center if domain is not None else (0.0, 0.0)
        rho = params.get("patch_radius")
        if rho is None:
            rho = domain.radius if domain is not None else 1.0
        return hemisphere_chart(params.get("R", 2.0), rho, center)
    if kind == "monge":
        return monge_chart(params.get("coefficients", []), domain)
    if kind == "pinched":
        return pinched_chart(domain)
    raise ValueError(f"unknown chart kind {kind!r}")


# ---------------------------------------------------------------------------
# metric quantities
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MetricFrame:
    g1: np.ndarray
    g2: np.ndarray
    g_lower: np.ndarray
    g_upper: np.ndarray
    G: np.ndarray
    sqrtG: np.ndarray
    n: np.ndarray
    H: np.ndarray


def _frame_arrays(chart, X, check=True):
    J = chart.jacobian(X)
    g1, g2 = J[..., 0, :], J[..., 1, :]
    g_lower = np.einsum("...ai,...bi->...ab", J, J)
    cross = np.cross(g1, g2)
    G = np.einsum("...i,...i->...", cross, cross)
    if check:
        floor = chart.lambda_min_floor ** 2
        bad = ~(G >= floor)
        if np.any(bad):
            where = np.asarray(X, dtype=float)[bad]
            raise DegenerateMetric(
                f"|g1 x g2|^2 below {floor:.3g} at {where[:3].tolist()}")
    det = g_lower[..., 0, 0] * g_lower[..., 1, 1] - g_lower[..., 0, 1] * g_lower[..., 1, 0]
    g_upper = np.empty_like(g_lower)
    # unchecked calls may hit degenerate points; they come back as inf/nan
    with np.errstate(divide="ignore", invalid="ignore"):
        g_upper[..., 0, 0] = g_lower[..., 1, 1] / det
        g_upper[..., 1, 1] = g_lower[..., 0, 0] / det
        g_upper[..., 0, 1] = -g_lower[..., 0, 1] / det
        g_upper[..., 1, 0] = -g_lower[..., 1, 0] / det
        sqrtG = np.sqrt(G)
        n = cross / sqrtG[..., None]
    return J, g_lower, g_upper, G, sqrtG, n


def _normal_derivatives(chart, X, J, n, sqrtG):
    """dn/dX_b, shape (..., 2, 3)."""
    Hs = chart.hessian(X)
    g1, g2 = J[..., 0, :], J[..., 1, :]
    dN = np.stack([np.cross(Hs[..., 0, b, :], g2) + np.cross(g1, Hs[..., 1, b, :])
                   for b in range(2)], axis=-2)
    normal_part = np.einsum("...bi,...i->...b", dN, n)
    return (dN - normal_part[..., None] * n[..., None, :]) / sqrtG[..., None, None]


def _mean_curvature(chart, X, J, g_upper, n, sqrtG):
    dn = _normal_derivatives(chart, X, J, n, sqrtG)
    # H = -g^{ab} g_a . dn/dX_b
    return -np.einsum("...ab,...ai,...bi->...", g_upper, J, dn)


def metric_frame(chart, X):
    """All pointwise metric quantities of ``chart`` at parameter point(s) X."""
    J, g_lower, g_upper, G, sqrtG, n = _frame_arrays(chart, X)
    H = _mean_curvature(chart, X, J, g_upper, n, sqrtG)
    return MetricFrame(J[..., 0, :], J[..., 1, :], g_lower, g_upper, G, sqrtG, n, H)


def mean_curvature(chart, X):
    """H = -div_G n with n = g1 x g2 / |g1 x g2|."""
    J, _, g_upper, _, sqrtG, n = _frame_arrays(chart, X)
    return _mean_curvature(chart, X, J, g_upper, n, sqrtG)


def conormal_from_normal(chart, X, nU):
    """Unit outer co-normal at boundary point(s) X given the planar outward normal n^U.

    Returns ``(nu, speed)`` where speed = |n1^U g2 - n2^U g1| is the line
    element converting ds on dU to dH^1 on the image curve.
    """
    J, _, _, _, _, n = _frame_arrays(chart, X)
    nU = np.asarray(nU, dtype=float)
    t = nU[..., 0, None] * J[..., 1, :] - nU[..., 1, None] * J[..., 0, :]
    speed = np.linalg.norm(t, axis=-1)
    if np.any(~(speed > 0)):
        raise ZeroTangent("n1^U g2 - n2^U g1 vanished on the boundary")
    nu = np.cross(t / speed[..., None], n)
    return nu, speed


def conormal(chart, s):
    """Co-normal at the analytic boundary point with parameter s."""
    dom = chart.domain
    nu, _ = conormal_from_normal(chart, dom.boundary_point(s), dom.boundary_normal(s))
    return nu


@dataclass
class ValidationReport:
    lambda_min_est: float
    lambda_max_est: float
    lambda_0_est: float
    worst_points: list
    passed: bool
    degenerate: bool
    floor: float

    def to_dict(self):
        return {
            "lambda_min_est": self.lambda_min_est,
            "lambda_max_est": self.lambda_max_est,
            "lambda_0_est": self.lambda_0_est,
            "worst_points": self.worst_points,
            "passed": self.passed,
            "degenerate": self.degenerate,
            "floor": self.floor,
        }


def sample_points(domain, sampling=16):
    """Polar sample grid over the closed domain, center and rim included."""
    if sampling < 8:
        raise ValueError("sampling must be at least 8")
    rho = np.linspace(0.0, 1.0, sampling)[1:]
    theta = np.linspace(0.0, 2.0 * np.pi, 4 * sampling, endpoint=False)
    R, T = np.meshgrid(rho, theta, indexing="ij")
    pts = domain.from_polar(R.ravel(), T.ravel())
    return np.vstack([np.asarray(domain.center)[None, :], pts])


def validate_chart(chart, sampling=16, floor=None):
    """Estimate lambda_min = min sqrt(G), lambda_max = max sqrt(G) and the
    ellipticity constant lambda_0 = min eig(g^{ab}) on a sample grid."""
    floor = chart.lambda_min_floor if floor is None else floor
    X = sample_points(chart.domain, sampling)
    J, g_lower, _, G, sqrtG, _ = _frame_arrays(chart, X, check=False)
    degenerate_mask = ~(G >= floor ** 2)
    worst = []
    for i in np.flatnonzero(degenerate_mask)[:10]:
        worst.append({"X": X[i].tolist(), "sqrtG": float(sqrtG[i]),
                      "flag": "DegenerateMetric"})
    ok = ~degenerate_mask
    if np.any(ok):
        # eigenvalues of g^{ab} are reciprocals of those of g_{ab}
        lam_upper = 1.0 / np.linalg.eigvalsh(g_lower[ok])[..., -1]
        lam0 = float(lam_upper.min())
        i_l0 = np.flatnonzero(ok)[int(np.argmin(lam_upper))]
    else:
        lam0 = 0.0
        i_l0 = 0
    i_min = int(np.argmin(sqrtG))
    lam_min = float(sqrtG[i_min])
    lam_max = float(sqrtG.max())
    worst.append({"X": X[i_min].tolist(), "sqrtG": lam_min, "flag": "lambda_min"})
    worst.append({"X": X[i_l0].tolist(), "lambda_0": lam0, "flag": "lambda_0"})
    degenerate = bool(degenerate_mask.any())
    passed = (not degenerate) and lam_min > floor and lam0 > floor
    return ValidationReport(lam_min, lam_max, lam0, worst, passed, degenerate, floor)
