"""Named analytic scalar and vector fields on the parameter domain.

Every field is a pullback f(X) with exact parameter derivatives, so identity
checks can integrate analytic data instead of nodal interpolants.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .geometry import _frame_arrays


@dataclass(frozen=True)
class ScalarField:
    """value(X) -> (...,), grad(X) -> (..., 2), hess(X) -> (..., 2, 2)."""

    value: Callable
    grad: Callable
    hess: Callable = None
    name: str = "custom"

    def __call__(self, X):
        return self.value(X)


@dataclass(frozen=True)
class VectorField:
    components: tuple
    name: str = "custom"

    def value(self, X):
        return np.stack([c.value(X) for c in self.components], axis=-1)

    def jacobian(self, X):
        """d f_j / d X_b, shape (..., 3, 2)."""
        return np.stack([c.grad(X) for c in self.components], axis=-2)


def _shape(X):
    return np.asarray(X, dtype=float).shape[:-1]


def constant(c=0.0):
    c = float(c)
    return ScalarField(lambda X: np.full(_shape(X), c),
                       lambda X: np.zeros(_shape(X) + (2,)),
                       lambda X: np.zeros(_shape(X) + (2, 2)),
                       name=f"constant({c})")


def linear(a=(1.0, 0.0), c=0.0):
    a = np.asarray(a, dtype=float)
    c = float(c)
    return ScalarField(lambda X: np.asarray(X, dtype=float) @ a + c,
                       lambda X: np.broadcast_to(a, _shape(X) + (2,)).copy(),
                       lambda X: np.zeros(_shape(X) + (2, 2)),
                       name="linear")


def monomial(i, j, coef=1.0):
    """coef * X1^i * X2^j."""
    def d(x, p, k):
        if k > p:
            return np.zeros_like(x)
        out = np.ones_like(x)
        fac = 1.0
        for m in range(k):
            fac *= p - m
        return fac * x ** (p - k) * out

    def value(X):
        X = np.asarray(X, dtype=float)
        return coef * d(X[..., 0], i, 0) * d(X[..., 1], j, 0)

    def grad(X):
        X = np.asarray(X, dtype=float)
        x, y = X[..., 0], X[..., 1]
        return coef * np.stack([d(x, i, 1) * d(y, j, 0), d(x, i, 0) * d(y, j, 1)], axis=-1)

    def hess(X):
        X = np.asarray(X, dtype=float)
        x, y = X[..., 0], X[..., 1]
        hxx = d(x, i, 2) * d(y, j, 0)
        hxy = d(x, i, 1) * d(y, j, 1)
        hyy = d(x, i, 0) * d(y, j, 2)
        return coef * np.stack([np.stack([hxx, hxy], -1), np.stack([hxy, hyy], -1)], -2)

    return ScalarField(value, grad, hess, name=f"monomial({i},{j})")


def cos_r2(radius=1.0, center=(0.0, 0.0)):
    """cos(pi |X - c|^2 / rho^2); its gradient vanishes on the circle of radius rho."""
    k = np.pi / float(radius) ** 2
    c = np.asarray(center, dtype=float)

    def value(X):
        Y = np.asarray(X, dtype=float) - c
        return np.cos(k * np.einsum("...i,...i->...", Y, Y))

    def grad(X):
        Y = np.asarray(X, dtype=float) - c
        u = np.einsum("...i,...i->...", Y, Y)
        return (-2.0 * k * np.sin(k * u))[..., None] * Y

    def hess(X):
        Y = np.asarray(X, dtype=float) - c
        u = np.einsum("...i,...i->...", Y, Y)
        eye = np.eye(2)
        return ((-2.0 * k * np.sin(k * u))[..., None, None] * eye
                - (4.0 * k * k * np.cos(k * u))[..., None, None] * np.einsum("...i,...j->...ij", Y, Y))

    return ScalarField(value, grad, hess, name="cos_r2")


def cos_r2_forcing(radius=1.0, center=(0.0, 0.0)):
    """-Delta_X of cos_r2 in the plane: 4k sin(k r^2) + 4k^2 r^2 cos(k r^2), k = pi/rho^2."""
    k = np.pi / float(radius) ** 2
    c = np.asarray(center, dtype=float)

    def value(X):
        Y = np.asarray(X, dtype=float) - c
        u = np.einsum("...i,...i->...", Y, Y)
        return 4.0 * k * np.sin(k * u) + 4.0 * k * k * u * np.cos(k * u)

    def grad(X):
        Y = np.asarray(X, dtype=float) - c
        u = np.einsum("...i,...i->...", Y, Y)
        dfdu = 4 * k * k * np.cos(k * u) + 4 * k * k * np.cos(k * u) - 4 * k ** 3 * u * np.sin(k * u)
        return (2.0 * dfdu)[..., None] * Y

    return ScalarField(value, grad, None, name="cos_r2_forcing")


def exp_sin(a=1.0, b=1.0):
    """exp(a X1) sin(b X2): a smooth non-polynomial test function."""
    def value(X):
        X = np.asarray(X, dtype=float)
        return np.exp(a * X[..., 0]) * np.sin(b * X[..., 1])

    def grad(X):
        X = np.asarray(X, dtype=float)
        e = np.exp(a * X[..., 0])
        return np.stack([a * e * np.sin(b * X[..., 1]), b * e * np.cos(b * X[..., 1])], -1)

    def hess(X):
        X = np.asarray(X, dtype=float)
        e = np.exp(a * X[..., 0])
        s, co = np.sin(b * X[..., 1]), np.cos(b * X[..., 1])
        hxx, hxy, hyy = a * a * e * s, a * b * e * co, -b * b * e * s
        return np.stack([np.stack([hxx, hxy], -1), np.stack([hxy, hyy], -1)], -2)

    return ScalarField(value, grad, hess, name="exp_sin")


def laplace_beltrami(chart, field, X):
    """Delta_G of a pullback with analytic Hessian:
    g^{ab} (d_ab v - Gamma^c_ab d_c v), Gamma^c_ab = g^{cd} (x_ab . g_d)."""
    J, _, g_upper, _, _, _ = _frame_arrays(chart, X)
    Hs = chart.hessian(X)
    christoffel_low = np.einsum("...abi,...di->...abd", Hs, J)
    christoffel = np.einsum("...cd,...abd->...cab", g_upper, christoffel_low)
    dv = field.grad(X)
    d2v = field.hess(X)
    corr = np.einsum("...cab,...c->...ab", christoffel, dv)
    return np.einsum("...ab,...ab->...", g_upper, d2v - corr)


@dataclass(frozen=True)
class Manufactured:
    """Exact solution v with zero co-normal derivative and its forcing F = -Delta_G v."""

    solution: ScalarField
    forcing: Callable  # chart -> ScalarField-like value function
    name: str = "custom"


def manufactured_cos_r2(radius=1.0, center=(0.0, 0.0)):
    v = cos_r2(radius, center)

    def forcing(chart):
        if chart.kind in ("flat",) or (chart.kind == "cylinder" and chart.catalog_id[1] == 1.0):
            return cos_r2_forcing(radius, center)
        return ScalarField(lambda X: -laplace_beltrami(chart, v, X), None, None,
                           name="cos_r2_surface_forcing")

    return Manufactured(v, forcing, name="cos_r2")


def zero_manufactured():
    z = constant(0.0)
    return Manufactured(z, lambda chart: z, name="zero")


def mean_curvature_field(chart):
    from .geometry import mean_curvature
    return ScalarField(lambda X: mean_curvature(chart, X), None, None, name="H")


# ---------------------------------------------------------------------------
# name-based catalog (used by the command-line front end)
# ---------------------------------------------------------------------------

def scalar_from_spec(spec, domain=None):
    """Build a ScalarField from ``{"id": ..., "params": {...}}``."""
    if spec is None:
        return constant(0.0)
    fid = spec["id"]
    p = dict(spec.get("params", {}))
    center = p.pop("center", list(domain.center) if domain is not None else [0.0, 0.0])
    rho = p.pop("radius", domain.radius if domain is not None and domain.kind == "disk" else 1.0)
    if fid == "zero":
        return constant(0.0)
    if fid == "constant":
        return constant(p.get("value", 1.0))
    if fid == "x1":
        return linear((1.0, 0.0))
    if fid == "x2":
        return linear((0.0, 1.0))
    if fid == "linear":
        return linear(p.get("a", (1.0, 0.0)), p.get("c", 0.0))
    if fid == "monomial":
        return monomial(p["i"], p["j"], p.get("coef", 1.0))
    if fid == "cos_r2":
        return cos_r2(rho, center)
    if fid == "cos_r2_forcing":
        return cos_r2_forcing(rho, center)
    if fid == "exp_sin":
        return exp_sin(p.get("a", 1.0), p.get("b", 1.0))
    raise KeyError(f"unknown scalar field id {fid!r}")


SCALAR_IDS = ("zero", "constant", "x1", "x2", "linear", "monomial", "cos_r2",
              "cos_r2_forcing", "exp_sin")


def vector_from_spec(spec, domain=None):
    """``{"id": "position_xy" | "rotation" | "constant", "params": {...}}`` or
    ``{"components": [scalar spec, scalar spec, scalar spec]}``."""
    if "components" in spec:
        return VectorField(tuple(scalar_from_spec(c, domain) for c in spec["components"]))
    fid = spec["id"]
    p = spec.get("params", {})
    if fid == "position_xy":
        return VectorField((linear((1, 0)), linear((0, 1)), constant(0.0)), "position_xy")
    if fid == "rotation":
        return VectorField((linear((0, 1)), linear((-1, 0)), constant(0.0)), "rotation")
    if fid == "constant":
        v = p.get("value", (0.0, 0.0, 1.0))
        return VectorField(tuple(constant(c) for c in v), "constant")
    raise KeyError(f"unknown vector field id {fid!r}")
