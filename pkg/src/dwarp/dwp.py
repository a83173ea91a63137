"""Doubly warped products ``N1 ×_(f2, f1) N2`` with metric ``f2² g1 ⊕ f1² g2``.

``f1`` lives on the first factor and scales the *second* block; ``f2`` lives on
the second factor and scales the first.  Accordingly the field
``U_i = -grad(ln f_i)`` (which lies in ``D_i``) pairs with the components of the
block that ``f_i`` warps.  ``warped_part(W, i, v)`` returns that component;
every closed form below is written in terms of it.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from . import exprs as ex
from . import riemann as rg
from .exprs import Expr
from .riemann import ChartedManifold, VectorField

__all__ = [
    "DoublyWarpedProduct",
    "WarpError",
    "build_dwp",
    "connection_difference",
    "dwp_connection_closed_form",
    "dwp_curvature_closed_form",
    "lift",
    "mixed_sectional_closed_form",
    "u_field",
    "warped_part",
    "wedge",
]

UNIT_TOL = 1e-8


class WarpError(ValueError):
    """A warping function is not strictly positive at a sample point."""


@dataclass(frozen=True)
class DoublyWarpedProduct:
    factor1: ChartedManifold
    factor2: ChartedManifold
    f1: Expr
    f2: Expr
    name: str = ""

    def __post_init__(self):
        shared = set(self.factor1.coords) & set(self.factor2.coords)
        if shared:
            raise ValueError(f"factor charts share coordinate names {sorted(shared)}")
        for label, f, M in (("f1", self.f1, self.factor1), ("f2", self.f2, self.factor2)):
            stray = ex.free_vars(f) - set(M.coords)
            if stray:
                raise ValueError(f"{label} must depend on {M.name or 'its factor'} only; found {sorted(stray)}")

    @property
    def n1(self) -> int:
        return self.factor1.dim

    @property
    def n2(self) -> int:
        return self.factor2.dim

    @property
    def dim(self) -> int:
        return self.n1 + self.n2

    @property
    def coords(self) -> tuple[str, ...]:
        return self.factor1.coords + self.factor2.coords

    def block(self, i: int) -> slice:
        """Index range of factor ``i`` inside product components."""
        if i == 1:
            return slice(0, self.n1)
        if i == 2:
            return slice(self.n1, self.dim)
        raise ValueError(f"factor index must be 1 or 2, got {i}")

    def warp(self, i: int) -> Expr:
        self.block(i)
        return self.f1 if i == 1 else self.f2

    def factor(self, i: int) -> ChartedManifold:
        self.block(i)
        return self.factor1 if i == 1 else self.factor2

    def split(self, p):
        p = np.asarray(p, dtype=float)
        return p[: self.n1], p[self.n1 :]

    def _block_metric(self, s1: Expr, s2: Expr, name: str) -> ChartedManifold:
        n1, n = self.n1, self.dim
        rows = []
        for a in range(n):
            row = []
            for b in range(n):
                if a < n1 and b < n1:
                    row.append(s1 * self.factor1.metric[a][b])
                elif a >= n1 and b >= n1:
                    row.append(s2 * self.factor2.metric[a - n1][b - n1])
                else:
                    row.append(ex.ZERO)
            rows.append(tuple(row))
        return ChartedManifold(self.coords, tuple(rows), self.factor1.bounds + self.factor2.bounds, name)

    @cached_property
    def product(self) -> ChartedManifold:
        """The doubly warped chart."""
        return self._block_metric(self.f2 ** 2, self.f1 ** 2, self.name or "dwp")

    @cached_property
    def direct(self) -> ChartedManifold:
        """The same chart with the direct product metric ``g1 ⊕ g2``."""
        return self._block_metric(ex.ONE, ex.ONE, (self.name or "dwp") + "/direct")

    def check_positive(self, points1, points2) -> None:
        for label, f, M, pts in (("f1", self.f1, self.factor1, points1), ("f2", self.f2, self.factor2, points2)):
            prog = ex.Program([f], M.coords)
            for q in np.atleast_2d(pts):
                v = float(prog(q)[0])
                if not v > 0.0:
                    where = ", ".join(f"{c}={x:.6g}" for c, x in zip(M.coords, q))
                    raise WarpError(f"{label} = {ex.to_str(f)} is {v:.6g} <= 0 at {where}")


def build_dwp(M1: ChartedManifold, M2: ChartedManifold, f1, f2, *, name: str = "",
              samples: int = 16, seed: int = 0) -> DoublyWarpedProduct:
    """Assemble a doubly warped product, checking positivity of ``f1``/``f2`` at seeded samples."""
    f1 = rg._as_expr(f1)
    f2 = rg._as_expr(f2)
    W = DoublyWarpedProduct(M1, M2, f1, f2, name)
    rng = np.random.default_rng(seed)
    W.check_positive(rg.sample_points(M1, samples, rng, 0.0), rg.sample_points(M2, samples, rng, 0.0))
    return W


def lift(W: DoublyWarpedProduct, i: int, field) -> VectorField:
    """Zero-pad a factor field (components in factor ``i`` coordinates) to the product chart."""
    comps = [rg._as_expr(c) for c in (field.components if isinstance(field, VectorField) else field)]
    if len(comps) != W.factor(i).dim:
        raise ValueError(f"factor {i} field needs {W.factor(i).dim} components")
    zeros = [ex.ZERO] * W.factor(3 - i).dim
    return VectorField(tuple(comps + zeros if i == 1 else zeros + comps), W.coords)


def lift_vector(W: DoublyWarpedProduct, i: int, v) -> np.ndarray:
    out = np.zeros(W.dim)
    out[W.block(i)] = np.asarray(v, dtype=float)
    return out


@lru_cache(maxsize=256)
def u_field(W: DoublyWarpedProduct, i: int) -> VectorField:
    """``U_i = -grad(ln f_i ∘ π_i)`` in the doubly warped metric, as closed-form components."""
    M = W.factor(i)
    f = W.warp(i)
    other_scale = W.warp(3 - i) ** 2
    ginv = rg.inverse_exprs(M.metric)
    dlog = [ex.diff(ex.log(f), c) for c in M.coords]
    comps = []
    for a in range(M.dim):
        s = ex.ZERO
        for b in range(M.dim):
            s = s + ginv[a][b] * dlog[b]
        comps.append(ex.neg(s / other_scale))
    return lift(W, i, comps)


def warped_part(W: DoublyWarpedProduct, i: int, v: np.ndarray) -> np.ndarray:
    """Component of ``v`` in the block scaled by ``f_i`` (the factor opposite to ``i``)."""
    out = np.zeros(W.dim)
    b = W.block(3 - i)
    out[b] = np.asarray(v, dtype=float)[b]
    return out


def wedge(X, Y, Z, metric: np.ndarray | None = None) -> np.ndarray:
    """``(X ∧ Y)Z = <Y, Z>X - <X, Z>Y``."""
    x, y, z = (rg._vec(v) for v in (X, Y, Z))
    for a, b in ((X, Y), (X, Z)):
        if isinstance(a, rg.TangentVector) and isinstance(b, rg.TangentVector) and a.point != b.point:
            raise ValueError("wedge arguments must share a base point")
    g = np.eye(len(x)) if metric is None else metric
    return (y @ g @ z) * x - (x @ g @ z) * y


# ---------------------------------------------------------------------------
# closed forms
# ---------------------------------------------------------------------------


class _PointData:
    """Everything the closed forms need at one point, evaluated once."""

    def __init__(self, W: DoublyWarpedProduct, p):
        p = W.product.check_point(p)
        self.W = W
        self.p = p
        self.g = rg.metric_at(W.product, p)
        self.u = {}
        self.du = {}
        for i in (1, 2):
            val, jac = u_field(W, i).jet(p)
            self.u[i], self.du[i] = val, jac
        self.gamma0 = rg.christoffel(W.direct, p)

    def ip(self, a, b) -> float:
        return float(a @ self.g @ b)

    def diff_tensor(self, x, y) -> np.ndarray:
        W = self.W
        out = np.zeros(W.dim)
        for i in (1, 2):
            xi, yi, U = warped_part(W, i, x), warped_part(W, i, y), self.u[i]
            out += self.ip(xi, yi) * U - self.ip(x, U) * yi - self.ip(y, U) * xi
        return out

    def nabla_u(self, x, i) -> np.ndarray:
        # ∇_x U_i = ∇⁰_x U_i + S(x, U_i)
        U = self.u[i]
        d0 = self.du[i] @ x + np.einsum("kij,i,j->k", self.gamma0, x, U)
        return d0 + self.diff_tensor(x, U)


def connection_difference(W: DoublyWarpedProduct, p, X, Y) -> np.ndarray:
    """``∇_X Y - ∇⁰_X Y`` from the closed form (tensorial in both slots)."""
    return _PointData(W, p).diff_tensor(rg._vec(X), rg._vec(Y))


def _at(F, p):
    return F.at(p) if isinstance(F, VectorField) else rg._vec(F)


def dwp_connection_closed_form(W: DoublyWarpedProduct, X, Y: VectorField, p) -> np.ndarray:
    """Levi-Civita derivative of ``Y`` along ``X`` from the direct-product connection plus warping terms."""
    data = _PointData(W, p)
    x = _at(X, p)
    yv, jy = Y.jet(data.p)
    nabla0 = jy @ x + np.einsum("kij,i,j->k", data.gamma0, x, yv)
    return nabla0 + data.diff_tensor(x, yv)


def dwp_curvature_closed_form(W: DoublyWarpedProduct, X, Y, Z, p) -> np.ndarray:
    """``R(X, Y)Z`` from the direct-product curvature plus wedge corrections built from ``U_1, U_2``."""
    data = _PointData(W, p)
    x, y, z = (_at(F, data.p) for F in (X, Y, Z))
    g = data.g
    rm0 = rg.riemann_components(W.direct, data.p)
    out = np.einsum("lijk,i,j,k->l", rm0, x, y, z)
    for i in (1, 2):
        U = data.u[i]
        ax = data.nabla_u(x, i) - data.ip(x, U) * U
        ay = data.nabla_u(y, i) - data.ip(y, U) * U
        out += wedge(ax, warped_part(W, i, y), z, g) - wedge(ay, warped_part(W, i, x), z, g)
    for i in (1, 2):
        for j in (1, 2):
            out += data.ip(data.u[i], data.u[j]) * wedge(warped_part(W, i, x), warped_part(W, j, y), z, g)
    return out


def mixed_sectional_closed_form(W: DoublyWarpedProduct, p, X, Z) -> float:
    """Sectional curvature of a mixed plane from the factor Hessians of the warping functions.

    ``X`` must lie in ``D1`` and ``Z`` in ``D2``, both unit in the doubly
    warped metric.  Equals ``-H¹f1(X, X)/f1 - H²f2(Z, Z)/f2`` with factor Hessians.
    """
    p = W.product.check_point(p)
    x, z = rg._vec(X), rg._vec(Z)
    g = rg.metric_at(W.product, p)
    b1, b2 = W.block(1), W.block(2)
    if np.any(np.abs(x[b2]) > 0) or np.any(np.abs(z[b1]) > 0):
        raise ValueError("X must lie in D1 and Z in D2")
    for label, v in (("X", x), ("Z", z)):
        norm = np.sqrt(v @ g @ v)
        if abs(norm - 1.0) > UNIT_TOL:
            raise ValueError(f"{label} is not unit in the doubly warped metric (|{label}| = {norm:.12g})")
    p1, p2 = W.split(p)
    f1 = ex.evaluate(W.f1, dict(zip(W.factor1.coords, p1)))
    f2 = ex.evaluate(W.f2, dict(zip(W.factor2.coords, p2)))
    h1 = rg.hessian(W.factor1, W.f1, p1, x[b1], x[b1])
    h2 = rg.hessian(W.factor2, W.f2, p2, z[b2], z[b2])
    return float(-h1 / f1 - h2 / f2)
