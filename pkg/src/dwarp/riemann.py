"""Single-chart Riemannian geometry evaluated pointwise.

Conventions (used by every other module):

* ``R(X, Y)Z = ∇_X ∇_Y Z - ∇_Y ∇_X Z - ∇_[X,Y] Z`` and
  ``K(X ∧ Y) = <R(X, Y)Y, X> / (|X|^2 |Y|^2 - <X, Y>^2)``, so the unit sphere
  has ``K = +1``.
* The Laplacian is the *negative* trace of the Hessian,
  ``Δψ = Σ_i ((∇_{e_i} e_i)ψ - e_i e_i ψ)``.  Hence ``Δ cos x = +cos x`` on the
  line and eigenvalues are non-negative.  This is opposite to the analyst's
  ``div grad``.

Component arrays use the index order ``Γ[k, i, j] = Γ^k_{ij}`` and
``Rm[l, i, j, k]`` with ``R(∂_i, ∂_j)∂_k = Rm[l, i, j, k] ∂_l``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import exprs as ex
from .exprs import Expr, Program

__all__ = [
    "ChartedManifold",
    "DegeneratePlaneError",
    "MetricError",
    "OutOfDomainError",
    "TangentVector",
    "VectorField",
    "christoffel",
    "christoffel_derivative",
    "covariant_derivative",
    "gradient",
    "hessian",
    "inverse_exprs",
    "laplacian",
    "metric_at",
    "orthonormal_frame",
    "riemann_components",
    "riemann_tensor",
    "sample_points",
    "scalar_jet",
    "sectional_curvature",
]

PD_TOL = 1e-12


class MetricError(ValueError):
    """Metric is not symmetric positive definite at a point."""

    def __init__(self, message: str, smallest_eigenvalue: float | None = None):
        self.smallest_eigenvalue = smallest_eigenvalue
        super().__init__(message)


class OutOfDomainError(ValueError):
    """A point lies outside the declared coordinate box."""


class DegeneratePlaneError(ValueError):
    """The two vectors spanning a plane are (numerically) dependent."""


def _as_expr(x) -> Expr:
    if isinstance(x, Expr):
        return x
    if isinstance(x, str):
        return ex.parse(x)
    return ex.const(float(x))


@dataclass(frozen=True)
class ChartedManifold:
    """One coordinate chart with a metric given by closed-form entries."""

    coords: tuple[str, ...]
    metric: tuple[tuple[Expr, ...], ...]
    bounds: tuple[tuple[float, float], ...]
    name: str = ""

    def __post_init__(self):
        n = len(self.coords)
        if n == 0:
            raise ValueError("a chart needs at least one coordinate")
        if len(set(self.coords)) != n:
            raise ValueError(f"duplicate coordinate names in {self.coords}")
        if len(self.metric) != n or any(len(row) != n for row in self.metric):
            raise ValueError(f"metric of {self.name or 'chart'} must be {n}x{n}")
        if len(self.bounds) != n:
            raise ValueError("one (lo, hi) bound per coordinate is required")
        for (lo, hi), c in zip(self.bounds, self.coords):
            if not lo < hi:
                raise ValueError(f"empty domain for coordinate {c}: ({lo}, {hi})")
        stray = set()
        for row in self.metric:
            for e in row:
                stray |= ex.free_vars(e) - set(self.coords)
        if stray:
            raise ValueError(f"metric uses undeclared variables {sorted(stray)}")

    @classmethod
    def build(cls, coords: Sequence[str], metric, bounds, name: str = "") -> "ChartedManifold":
        """Convenience constructor accepting strings/numbers; a flat list is read as a diagonal."""
        coords = tuple(coords)
        n = len(coords)
        rows = list(metric)
        if rows and not isinstance(rows[0], (list, tuple)):
            rows = [[rows[i] if i == j else 0 for j in range(n)] for i in range(n)]
        g = tuple(tuple(_as_expr(v) for v in row) for row in rows)
        return cls(coords, g, tuple((float(lo), float(hi)) for lo, hi in bounds), name)

    @property
    def dim(self) -> int:
        return len(self.coords)

    def contains(self, p, margin: float = 0.0) -> bool:
        p = np.asarray(p, dtype=float)
        for x, (lo, hi) in zip(p, self.bounds):
            pad = margin * (hi - lo)
            if not lo + pad < x < hi - pad:
                return False
        return True

    def check_point(self, p) -> np.ndarray:
        p = np.asarray(p, dtype=float)
        if p.shape != (self.dim,):
            raise ValueError(f"point must have {self.dim} coordinates, got shape {p.shape}")
        if not self.contains(p):
            raise OutOfDomainError(
                f"point {tuple(p)} outside the domain of {self.name or 'chart'} {self.bounds}"
            )
        return p

    # compiled metric jets ---------------------------------------------------
    @cached_property
    def _jet_programs(self) -> tuple[Program, Program, Program]:
        n = self.dim
        g = [self.metric[i][j] for i in range(n) for j in range(n)]
        dg = [ex.diff(self.metric[i][j], self.coords[k]) for k in range(n) for i in range(n) for j in range(n)]
        ddg = [
            ex.diff(ex.diff(self.metric[i][j], self.coords[k]), self.coords[m])
            for m in range(n)
            for k in range(n)
            for i in range(n)
            for j in range(n)
        ]
        return (
            Program(g, self.coords),
            Program(g + dg, self.coords),
            Program(g + dg + ddg, self.coords),
        )

    def metric_jet(self, p, order: int = 0):
        """Metric and its coordinate derivatives at ``p`` without domain checks.

        Returns ``g`` or ``(g, dg)`` or ``(g, dg, ddg)`` with ``dg[k] = ∂_k g`` and
        ``ddg[m, k] = ∂_m ∂_k g``.
        """
        n = self.dim
        vals = self._jet_programs[order](np.asarray(p, dtype=float))
        g = vals[: n * n].reshape(n, n)
        if order == 0:
            return g
        dg = vals[n * n : n * n + n**3].reshape(n, n, n)
        if order == 1:
            return g, dg
        ddg = vals[n * n + n**3 :].reshape(n, n, n, n)
        return g, dg, ddg


def sample_points(M: ChartedManifold, count: int, rng: np.random.Generator, margin: float = 0.05) -> np.ndarray:
    """Uniform draws from the coordinate box shrunk by ``margin`` of each side length."""
    lo = np.array([a for a, _ in M.bounds])
    hi = np.array([b for _, b in M.bounds])
    pad = margin * (hi - lo)
    return rng.uniform(lo + pad, hi - pad, size=(count, M.dim))


# ---------------------------------------------------------------------------
# Vectors and fields
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class TangentVector:
    point: tuple[float, ...]
    components: np.ndarray = field(compare=False)

    def __post_init__(self):
        comps = np.asarray(self.components, dtype=float)
        if comps.ndim != 1:
            raise ValueError("tangent vector components must be a flat array")
        object.__setattr__(self, "components", comps)
        object.__setattr__(self, "point", tuple(float(x) for x in self.point))
        if len(self.point) != len(comps):
            raise ValueError("component count must equal the chart dimension")


def _vec(v) -> np.ndarray:
    if isinstance(v, TangentVector):
        return v.components
    return np.asarray(v, dtype=float)


@dataclass(frozen=True)
class VectorField:
    """Vector field with closed-form components in the chart basis."""

    components: tuple[Expr, ...]
    coords: tuple[str, ...]

    def __post_init__(self):
        if len(self.components) != len(self.coords):
            raise ValueError("a vector field needs one component per coordinate")

    @classmethod
    def build(cls, components, coords: Sequence[str]) -> "VectorField":
        return cls(tuple(_as_expr(c) for c in components), tuple(coords))

    @classmethod
    def coordinate(cls, index: int, coords: Sequence[str]) -> "VectorField":
        return cls.build([1 if i == index else 0 for i in range(len(coords))], coords)

    @cached_property
    def _program(self) -> Program:
        n = len(self.coords)
        outs = list(self.components)
        outs += [ex.diff(self.components[k], self.coords[i]) for k in range(n) for i in range(n)]
        return Program(outs, self.coords)

    def at(self, p) -> np.ndarray:
        return self.jet(p)[0]

    def jet(self, p) -> tuple[np.ndarray, np.ndarray]:
        """Values and Jacobian ``J[k, i] = ∂_i Y^k`` at ``p``."""
        n = len(self.coords)
        vals = self._program(np.asarray(p, dtype=float))
        return vals[:n], vals[n:].reshape(n, n)


@lru_cache(maxsize=8192)
def scalar_jet(psi: Expr, coords: tuple[str, ...]) -> Program:
    """Compiled ``[ψ, ∂_i ψ, ∂_i ∂_j ψ]`` in ``coords``."""
    n = len(coords)
    d1 = [ex.diff(psi, c) for c in coords]
    d2 = [ex.diff(d1[i], coords[j]) for i in range(n) for j in range(n)]
    return Program([psi, *d1, *d2], coords)


def _psi_jet(psi, coords, p):
    psi = _as_expr(psi)
    n = len(coords)
    vals = scalar_jet(psi, tuple(coords))(np.asarray(p, dtype=float))
    return vals[0], vals[1 : n + 1], vals[n + 1 :].reshape(n, n)


# ---------------------------------------------------------------------------
# Metric algebra
# ---------------------------------------------------------------------------


def _check_pd(g: np.ndarray, where: str = "") -> None:
    if not np.allclose(g, g.T, rtol=1e-12, atol=1e-12):
        raise MetricError(f"metric not symmetric{where}")
    lam = float(np.linalg.eigvalsh(0.5 * (g + g.T))[0])
    if not lam > PD_TOL:
        raise MetricError(f"metric not positive definite{where}: smallest eigenvalue {lam:.3e}", lam)


def metric_at(M: ChartedManifold, p) -> np.ndarray:
    p = M.check_point(p)
    g = M.metric_jet(p)
    _check_pd(g, f" at {tuple(p)}")
    return g


def _christoffel_lowered(dg: np.ndarray) -> np.ndarray:
    # Γ_{l,ij} = ½(∂_i g_lj + ∂_j g_li − ∂_l g_ij);  dg[k, a, b] = ∂_k g_ab
    return 0.5 * (
        np.einsum("ilj->lij", dg) + np.einsum("jli->lij", dg) - dg
    )


def _christoffel_from(g, dg):
    ginv = np.linalg.inv(g)
    low = _christoffel_lowered(dg)
    return np.einsum("kl,lij->kij", ginv, low), ginv, low


def christoffel(M: ChartedManifold, p) -> np.ndarray:
    """``Γ[k, i, j] = Γ^k_{ij}`` of the Levi-Civita connection."""
    p = M.check_point(p)
    g, dg = M.metric_jet(p, 1)
    _check_pd(g, f" at {tuple(p)}")
    return _christoffel_from(g, dg)[0]


def _connection_jet(M: ChartedManifold, p):
    g, dg, ddg = M.metric_jet(p, 2)
    _check_pd(g, f" at {tuple(np.asarray(p, float))}")
    gamma, ginv, low = _christoffel_from(g, dg)
    # ∂_m Γ_{l,ij} from second metric derivatives; ddg[m, k, a, b] = ∂_m ∂_k g_ab
    dlow = 0.5 * (
        np.einsum("milj->mlij", ddg)
        + np.einsum("mjli->mlij", ddg)
        - ddg
    )
    dginv = -np.einsum("ka,mab,bl->mkl", ginv, dg, ginv)
    dgamma = np.einsum("mkl,lij->mkij", dginv, low) + np.einsum("kl,mlij->mkij", ginv, dlow)
    return g, gamma, dgamma


def christoffel_derivative(M: ChartedManifold, p) -> np.ndarray:
    """``dΓ[m, k, i, j] = ∂_m Γ^k_{ij}``."""
    p = M.check_point(p)
    return _connection_jet(M, p)[2]


def _riemann_from(gamma: np.ndarray, dgamma: np.ndarray) -> np.ndarray:
    # Rm[l,i,j,k] = ∂_i Γ^l_jk − ∂_j Γ^l_ik + Γ^l_im Γ^m_jk − Γ^l_jm Γ^m_ik
    t1 = np.einsum("iljk->lijk", dgamma)
    t2 = np.einsum("jlik->lijk", dgamma)
    t3 = np.einsum("lim,mjk->lijk", gamma, gamma)
    t4 = np.einsum("ljm,mik->lijk", gamma, gamma)
    return t1 - t2 + t3 - t4


def riemann_components(M: ChartedManifold, p) -> np.ndarray:
    """``Rm[l, i, j, k]`` with ``R(∂_i, ∂_j)∂_k = Rm[l, i, j, k] ∂_l``."""
    p = M.check_point(p)
    _, gamma, dgamma = _connection_jet(M, p)
    return _riemann_from(gamma, dgamma)


def curvature_data(M: ChartedManifold, p):
    """``(g, Γ, Rm)`` at ``p`` in one pass; the workhorse for callers needing all three."""
    p = M.check_point(p)
    g, gamma, dgamma = _connection_jet(M, p)
    return g, gamma, _riemann_from(gamma, dgamma)


def lowered_riemann(g: np.ndarray, rm: np.ndarray) -> np.ndarray:
    """``R[i, j, k, l] = <R(∂_i, ∂_j)∂_k, ∂_l>``."""
    return np.einsum("aijk,al->ijkl", rm, g)


# ---------------------------------------------------------------------------
# Derivatives of fields
# ---------------------------------------------------------------------------


def covariant_derivative(M: ChartedManifold, X: VectorField, Y: VectorField, p) -> np.ndarray:
    """``(∇_X Y)^k = X^i ∂_i Y^k + Γ^k_{ij} X^i Y^j`` at ``p``."""
    p = M.check_point(p)
    gamma = christoffel(M, p)
    x = X.at(p)
    y, jy = Y.jet(p)
    return jy @ x + np.einsum("kij,i,j->k", gamma, x, y)


def riemann_tensor(M: ChartedManifold, X, Y, Z, p) -> np.ndarray:
    """``R(X, Y)Z`` at ``p``; fields may be :class:`VectorField` or plain vectors."""
    rm = riemann_components(M, p)
    x, y, z = (f.at(p) if isinstance(f, VectorField) else _vec(f) for f in (X, Y, Z))
    return np.einsum("lijk,i,j,k->l", rm, x, y, z)


def sectional_curvature(M: ChartedManifold, p, X, Y, *, rm=None, g=None) -> float:
    """``K(X ∧ Y) = <R(X,Y)Y, X> / (|X|^2|Y|^2 - <X,Y>^2)``."""
    if rm is None or g is None:
        g, _, rm = curvature_data(M, p)
    x, y = _vec(X), _vec(Y)
    gram = (x @ g @ x) * (y @ g @ y) - (x @ g @ y) ** 2
    if gram < 1e-12 * max((x @ g @ x) * (y @ g @ y), 1e-300) or gram < 1e-24:
        raise DegeneratePlaneError("vectors span a degenerate plane")
    ryy = np.einsum("lijk,i,j,k->l", rm, x, y, y)
    return float(ryy @ g @ x / gram)


def gradient(M: ChartedManifold, psi, p) -> np.ndarray:
    """Components ``g^{ij} ∂_j ψ``."""
    p = M.check_point(p)
    g = M.metric_jet(p)
    _check_pd(g, f" at {tuple(p)}")
    _, d1, _ = _psi_jet(psi, M.coords, p)
    return np.linalg.solve(g, d1)


def hessian(M: ChartedManifold, psi, p, X, Y) -> float:
    """``H^ψ(X, Y) = XYψ - (∇_X Y)ψ`` for constant-coefficient extensions."""
    p = M.check_point(p)
    gamma = christoffel(M, p)
    _, d1, d2 = _psi_jet(psi, M.coords, p)
    return float(_hessian_matrix(gamma, d1, d2) @ _vec(Y) @ _vec(X))


def _hessian_matrix(gamma, d1, d2) -> np.ndarray:
    return d2 - np.einsum("kij,k->ij", gamma, d1)


def hessian_matrix(M: ChartedManifold, psi, p) -> np.ndarray:
    """Coordinate matrix ``H_ij = H^ψ(∂_i, ∂_j)``."""
    p = M.check_point(p)
    gamma = christoffel(M, p)
    _, d1, d2 = _psi_jet(psi, M.coords, p)
    return _hessian_matrix(gamma, d1, d2)


def laplacian(M: ChartedManifold, psi, p, frame: Sequence[np.ndarray] | None = None) -> float:
    """``Δψ = Σ_i ((∇_{e_i} e_i)ψ - e_i e_i ψ)`` over an orthonormal frame (note the sign)."""
    p = M.check_point(p)
    if frame is None:
        frame = orthonormal_frame(M, p)
    gamma = christoffel(M, p)
    _, d1, d2 = _psi_jet(psi, M.coords, p)
    total = 0.0
    for e in frame:
        e = _vec(e)
        nabla_ee = np.einsum("kij,i,j->k", gamma, e, e)
        total += nabla_ee @ d1 - e @ d2 @ e
    return float(total)


def gram_schmidt(vectors: Iterable[np.ndarray], g: np.ndarray, tol: float = 1e-10) -> list[np.ndarray]:
    """Unpivoted Gram–Schmidt in the inner product ``g``; dependent inputs are dropped."""
    basis: list[np.ndarray] = []
    for v in vectors:
        w = np.array(v, dtype=float)
        scale = np.sqrt(max(w @ g @ w, 0.0))
        for _ in range(2):  # re-orthogonalise once for stability
            for b in basis:
                w = w - (b @ g @ w) * b
        norm = np.sqrt(max(w @ g @ w, 0.0))
        if norm > tol * max(scale, 1.0):
            basis.append(w / norm)
    return basis


def orthonormal_frame(M: ChartedManifold, p, order: Sequence[int] | None = None) -> list[np.ndarray]:
    """Gram–Schmidt of the coordinate basis in ``order`` (default: coordinate order)."""
    g = metric_at(M, p)
    n = M.dim
    order = range(n) if order is None else order
    frame = gram_schmidt((np.eye(n)[i] for i in order), g)
    if len(frame) != n:
        raise MetricError("metric is singular: coordinate basis is dependent")
    return frame


# ---------------------------------------------------------------------------
# Symbolic helpers
# ---------------------------------------------------------------------------


def _det_exprs(m: list[list[Expr]]) -> Expr:
    n = len(m)
    if n == 1:
        return m[0][0]
    if n == 2:
        return m[0][0] * m[1][1] - m[0][1] * m[1][0]
    total = ex.ZERO
    for j in range(n):
        if m[0][j].is_number(0.0):
            continue
        minor = [row[:j] + row[j + 1 :] for row in m[1:]]
        term = m[0][j] * _det_exprs(minor)
        total = total + term if j % 2 == 0 else total - term
    return total


def inverse_exprs(matrix: Sequence[Sequence[Expr]]) -> tuple[tuple[Expr, ...], ...]:
    """Symbolic inverse by cofactors; intended for the small matrices of factor charts."""
    m = [[_as_expr(v) for v in row] for row in matrix]
    n = len(m)
    if n == 1:
        return ((ex.ONE / m[0][0],),)
    det = _det_exprs(m)
    out = [[ex.ZERO] * n for _ in range(n)]
    for i, j in itertools.product(range(n), range(n)):
        minor = [row[:j] + row[j + 1 :] for k, row in enumerate(m) if k != i]
        cof = _det_exprs(minor)
        if (i + j) % 2:
            cof = -cof
        out[j][i] = cof / det
    return tuple(tuple(row) for row in out)


def metric_exprs_at(M: ChartedManifold, mapping: Mapping[str, Expr]) -> tuple[tuple[Expr, ...], ...]:
    """Metric entries with coordinates replaced by expressions (composition with a map)."""
    return tuple(tuple(ex.substitute(e, mapping) for e in row) for row in M.metric)
