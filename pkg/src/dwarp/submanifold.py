"""Isometric immersions between charts: second fundamental form, shape operator,
normal connection, mean curvature and the Gauss equation.

Sign conventions: ``∇̃_X Y = ∇_X Y + h(X, Y)`` and ``∇̃_X η = -A_η X + D_X η``.
For the unit sphere in flat space with outward normal ``ν`` this gives
``h(X, Y) = -<X, Y> ν`` and ``A_ν = -I``.

Normal frames come from Gram–Schmidt of the ambient coordinate basis against
the tangent space, so their orientation is whatever that produces.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Sequence

import numpy as np

from . import exprs as ex
from . import riemann as rg
from .exprs import Expr, Program
from .riemann import ChartedManifold

__all__ = [
    "Classification",
    "FieldAlong",
    "ImmersionError",
    "ImmersionPoint",
    "ImmersionSpec",
    "NotNormalError",
    "classify",
    "gauss_equation_residual",
    "isometry_residual",
    "mean_curvature",
    "normal_connection",
    "pushforward",
    "second_fundamental_form",
    "shape_operator",
]

ISOMETRY_TOL = 1e-8
NORMAL_TOL = 1e-8
RANK_TOL = 1e-10
CLASSIFY_TOL = 1e-6
INDETERMINATE_FACTOR = 10.0


class ImmersionError(ValueError):
    """Rank deficiency or isometry violation."""


class NotNormalError(ValueError):
    """A vector that should be normal has a tangential component."""


@dataclass(frozen=True)
class ImmersionSpec:
    source: ChartedManifold
    target: ChartedManifold
    components: tuple[Expr, ...]
    name: str = ""

    def __post_init__(self):
        if len(self.components) != self.target.dim:
            raise ValueError(
                f"immersion {self.name!r} needs {self.target.dim} components, got {len(self.components)}"
            )
        if self.source.dim > self.target.dim:
            raise ValueError("source dimension exceeds target dimension")
        stray = set()
        for e in self.components:
            stray |= ex.free_vars(e) - set(self.source.coords)
        if stray:
            raise ValueError(f"immersion {self.name!r} uses undeclared variables {sorted(stray)}")

    @classmethod
    def build(cls, source: ChartedManifold, target: ChartedManifold, components, name: str = "") -> "ImmersionSpec":
        return cls(source, target, tuple(rg._as_expr(c) for c in components), name)

    @classmethod
    def identity(cls, M: ChartedManifold, name: str = "") -> "ImmersionSpec":
        return cls(M, M, tuple(ex.var(c) for c in M.coords), name or f"id_{M.name}")

    @property
    def n(self) -> int:
        return self.source.dim

    @property
    def m(self) -> int:
        return self.target.dim

    @cached_property
    def _jet_program(self) -> Program:
        coords = self.source.coords
        outs = list(self.components)
        d1 = [[ex.diff(e, c) for c in coords] for e in self.components]
        outs += [d for row in d1 for d in row]
        outs += [ex.diff(d1[C][a], coords[b]) for C in range(self.m) for a in range(self.n) for b in range(self.n)]
        return Program(outs, coords)

    def jet(self, p):
        """``(φ(p), J, H)`` with ``J[C, a] = ∂_a φ^C`` and ``H[C, a, b] = ∂_a ∂_b φ^C``."""
        m, n = self.m, self.n
        vals = self._jet_program(np.asarray(p, dtype=float))
        return vals[:m], vals[m : m + m * n].reshape(m, n), vals[m + m * n :].reshape(m, n, n)

    def map(self, p) -> np.ndarray:
        return self.jet(p)[0]


@dataclass(frozen=True)
class FieldAlong:
    """Ambient-valued field along an immersion: ``m`` expressions in source coordinates."""

    components: tuple[Expr, ...]
    coords: tuple[str, ...]

    @classmethod
    def build(cls, components, coords: Sequence[str]) -> "FieldAlong":
        return cls(tuple(rg._as_expr(c) for c in components), tuple(coords))

    @cached_property
    def _program(self) -> Program:
        outs = list(self.components)
        outs += [ex.diff(e, c) for e in self.components for c in self.coords]
        return Program(outs, self.coords)

    def jet(self, p):
        """Values and ``J[C, a] = ∂_a η^C``."""
        m = len(self.components)
        vals = self._program(np.asarray(p, dtype=float))
        return vals[:m], vals[m:].reshape(m, len(self.coords))


class ImmersionPoint:
    """Pointwise geometry of an immersion, evaluated once and reused.

    Attributes: ``x`` (source point), ``y`` (image), ``J``, ``g`` (source
    metric), ``G`` (ambient metric at the image), ``gamma`` (ambient
    Christoffel symbols), ``frame`` (orthonormal source frame, rows),
    ``E`` (pushed frame, rows), ``normals`` (orthonormal normal frame, rows).
    """

    def __init__(self, phi: ImmersionSpec, p, *, frame: Sequence[np.ndarray] | None = None,
                 check_isometry: bool = True, iso_tol: float = ISOMETRY_TOL):
        self.phi = phi
        self.x = phi.source.check_point(p)
        self.y, self.J, self.H = phi.jet(self.x)
        self.y = phi.target.check_point(self.y)
        self.g = rg.metric_at(phi.source, self.x)
        G, dG = phi.target.metric_jet(self.y, 1)
        rg._check_pd(G, f" at image point {tuple(self.y)}")
        self.G = G
        self.gamma = rg._christoffel_from(G, dG)[0]
        sv = np.linalg.svd(self.J, compute_uv=False)
        if sv[-1] <= RANK_TOL * max(sv[0], 1.0):
            raise ImmersionError(f"Jacobian of {phi.name or 'immersion'} is rank deficient at {tuple(self.x)}")
        self.pullback = self.J.T @ G @ self.J
        self.iso_residual = float(np.max(np.abs(self.pullback - self.g)))
        if check_isometry and self.iso_residual > iso_tol:
            raise ImmersionError(
                f"{phi.name or 'immersion'} is not isometric at {tuple(self.x)}: residual {self.iso_residual:.3e}"
            )
        if frame is None:
            frame = rg.gram_schmidt(np.eye(phi.n), self.g)
        self.frame = np.array(frame, dtype=float).reshape(-1, phi.n)
        self.E = self.frame @ self.J.T
        # tangential projector in the ambient metric: P = J (JᵀGJ)⁻¹ JᵀG
        self.P = self.J @ np.linalg.solve(self.pullback, self.J.T @ G)
        tangent = rg.gram_schmidt(self.J.T, G)
        basis = rg.gram_schmidt(list(tangent) + list(np.eye(phi.m)), G)
        self.normals = np.array(basis[len(tangent) :]).reshape(-1, phi.m)

    # -- inner products ------------------------------------------------------
    def ip(self, a, b) -> float:
        return float(a @ self.G @ b)

    def norm(self, a) -> float:
        return float(np.sqrt(max(a @ self.G @ a, 0.0)))

    def normal_part(self, v) -> np.ndarray:
        return v - self.P @ v

    def tangent_part(self, v) -> np.ndarray:
        return self.P @ v

    def to_source(self, v) -> np.ndarray:
        """Source components of a tangent ambient vector."""
        return np.linalg.solve(self.pullback, self.J.T @ self.G @ v)

    def check_normal(self, eta, tol: float = NORMAL_TOL) -> None:
        eta = np.asarray(eta, dtype=float)
        scale = max(self.norm(eta), 1.0)
        tan = self.norm(self.tangent_part(eta))
        if tan > tol * scale:
            raise NotNormalError(f"vector has tangential component of size {tan:.3e}")

    # -- geometry ------------------------------------------------------------
    def ambient_second_derivative(self, X, Y) -> np.ndarray:
        """``∇̃_{dφX} dφY`` for constant-coefficient extensions of ``X, Y``."""
        x, y = rg._vec(X), rg._vec(Y)
        jx, jy = self.J @ x, self.J @ y
        return np.einsum("Cab,a,b->C", self.H, x, y) + np.einsum("Cij,i,j->C", self.gamma, jx, jy)

    def h(self, X, Y) -> np.ndarray:
        return self.normal_part(self.ambient_second_derivative(X, Y))

    @cached_property
    def h_frame(self) -> np.ndarray:
        """``h(e_a, e_b)`` for the stored frame, shape ``(n, n, m)``."""
        k = len(self.frame)
        out = np.zeros((k, k, self.phi.m))
        for a in range(k):
            for b in range(a, k):
                out[a, b] = out[b, a] = self.h(self.frame[a], self.frame[b])
        return out

    def shape_matrix(self, eta) -> np.ndarray:
        """``<A_η e_a, e_b> = <h(e_a, e_b), η>`` in the stored frame."""
        self.check_normal(eta)
        return np.einsum("abC,CD,D->ab", self.h_frame, self.G, np.asarray(eta, dtype=float))

    def shape_apply(self, eta, X) -> np.ndarray:
        """``A_η X`` as source components."""
        S = self.shape_matrix(eta)
        coeff = self.frame @ self.g @ rg._vec(X)  # components of X in the frame
        return (S @ coeff) @ self.frame

    def mean_curvature(self) -> np.ndarray:
        k = len(self.frame)
        return np.einsum("aaC->C", self.h_frame) / k

    def ambient_derivative(self, X, eta: FieldAlong) -> np.ndarray:
        """``∇̃_X η`` for a field along the immersion."""
        x = rg._vec(X)
        val, jac = eta.jet(self.x)
        return jac @ x + np.einsum("Cij,i,j->C", self.gamma, self.J @ x, val)

    def normal_connection(self, X, eta: FieldAlong) -> np.ndarray:
        val, _ = eta.jet(self.x)
        self.check_normal(val)
        return self.normal_part(self.ambient_derivative(X, eta))


# ---------------------------------------------------------------------------
# module-level operations
# ---------------------------------------------------------------------------


def pushforward(phi: ImmersionSpec, p, X) -> np.ndarray:
    p = phi.source.check_point(p)
    _, J, _ = phi.jet(p)
    sv = np.linalg.svd(J, compute_uv=False)
    if sv[-1] <= RANK_TOL * max(sv[0], 1.0):
        raise ImmersionError(f"Jacobian is rank deficient at {tuple(p)}")
    return J @ rg._vec(X)


def isometry_residual(phi: ImmersionSpec, p) -> float:
    """``max |Jᵀ G J - g|`` at ``p``."""
    p = phi.source.check_point(p)
    y, J, _ = phi.jet(p)
    G = phi.target.metric_jet(y)
    g = phi.source.metric_jet(p)
    return float(np.max(np.abs(J.T @ G @ J - g)))


def second_fundamental_form(phi: ImmersionSpec, p, X, Y) -> np.ndarray:
    """``h(X, Y)`` as ambient components."""
    return ImmersionPoint(phi, p).h(X, Y)


def shape_operator(phi: ImmersionSpec, p, eta) -> np.ndarray:
    """Matrix of ``A_η`` in the orthonormal frame from :func:`riemann.orthonormal_frame`."""
    return ImmersionPoint(phi, p).shape_matrix(eta)


def normal_connection(phi: ImmersionSpec, p, X, eta: FieldAlong) -> np.ndarray:
    """``D_X η`` as ambient components."""
    return ImmersionPoint(phi, p).normal_connection(X, eta)


def mean_curvature(phi: ImmersionSpec, p, frame=None) -> np.ndarray:
    return ImmersionPoint(phi, p, frame=frame).mean_curvature()


def gauss_equation_residual(phi: ImmersionSpec, p, X, Y, Z, W, c: float | None = None) -> float:
    """``|<R̃(X,Y)Z,W> - <R(X,Y)Z,W> - <h(X,Z),h(Y,W)> + <h(X,W),h(Y,Z)>|``.

    With ``c`` given the ambient term is the constant-curvature tensor instead
    of the computed one.
    """
    pt = ImmersionPoint(phi, p)
    x, y, z, w = (rg._vec(v) for v in (X, Y, Z, W))
    jx, jy, jz, jw = (pt.J @ v for v in (x, y, z, w))
    if c is None:
        rmt = rg.riemann_components(phi.target, pt.y)
        amb = pt.ip(np.einsum("lijk,i,j,k->l", rmt, jx, jy, jz), jw)
    else:
        amb = c * (pt.ip(jy, jz) * pt.ip(jx, jw) - pt.ip(jx, jz) * pt.ip(jy, jw))
    rms = rg.riemann_components(phi.source, pt.x)
    intr = float(np.einsum("lijk,i,j,k->l", rms, x, y, z) @ pt.g @ w)
    hxz, hyw, hxw, hyz = pt.h(x, z), pt.h(y, w), pt.h(x, w), pt.h(y, z)
    return abs(amb - intr - pt.ip(hxz, hyw) + pt.ip(hxw, hyz))


def verdict(residual: float, tol: float) -> bool | None:
    """True below ``tol``, False above ``10·tol``, None (indeterminate) in between."""
    if residual <= tol:
        return True
    if residual > INDETERMINATE_FACTOR * tol:
        return False
    return None


@dataclass(frozen=True)
class Classification:
    totally_geodesic: bool | None
    totally_umbilical: bool | None
    minimal: bool | None
    geodesic_residual: float
    umbilical_residual: float
    minimal_residual: float

    def as_dict(self) -> dict:
        return {
            "totally_geodesic": self.totally_geodesic,
            "totally_umbilical": self.totally_umbilical,
            "minimal": self.minimal,
            "geodesic_residual": self.geodesic_residual,
            "umbilical_residual": self.umbilical_residual,
            "minimal_residual": self.minimal_residual,
        }


def umbilicity_residual(pt: ImmersionPoint) -> float:
    """``max_ξ min_λ ||A_ξ - λI||_F`` over the orthonormal normal frame."""
    worst = 0.0
    n = len(pt.frame)
    for xi in pt.normals:
        S = pt.shape_matrix(xi)
        lam = np.trace(S) / n
        worst = max(worst, float(np.linalg.norm(S - lam * np.eye(n))))
    return worst


def geodesic_residual(pt: ImmersionPoint) -> float:
    """``||h||`` over the orthonormal frame."""
    return float(np.sqrt(max(np.einsum("abC,CD,abD->", pt.h_frame, pt.G, pt.h_frame), 0.0)))


def classify(phi: ImmersionSpec, points, tol: float = CLASSIFY_TOL, *, check_isometry: bool = True) -> Classification:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    tg = tu = mn = 0.0
    for p in points:
        pt = ImmersionPoint(phi, p, check_isometry=check_isometry)
        tg = max(tg, geodesic_residual(pt))
        tu = max(tu, umbilicity_residual(pt))
        mn = max(mn, pt.norm(pt.mean_curvature()))
    return Classification(verdict(tg, tol), verdict(tu, tol), verdict(mn, tol), tg, tu, mn)
