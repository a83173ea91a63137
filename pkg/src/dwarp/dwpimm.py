"""Doubly warped product immersions ``φ = (φ1, φ2)`` and their structure identities.

A scenario pairs factor immersions ``φ_i: N_i → M_i`` with an ambient doubly
warped product ``M1 ×_(ρ2, ρ1) M2``; the source is ``N1 ×_(f2, f1) N2`` with
``f_i = ρ_i ∘ φ_i`` composed symbolically.

Reading of ``Δ^i`` and ``𝓗^{f_i}``: both are taken on the *leaf* through the
point, i.e. on ``N_i`` with the metric induced by the doubly warped metric
(``f_j(p_j)² g_i``).  So ``Δ^1 f1 = Δ_{g1} f1 / f2²``.  With the bare factor
Laplacian the trace relation for ``<H1, H2>`` does not hold in general.

``D ln ρ_i`` is the normal part, along the image, of the ambient gradient of
``ln ρ_i`` in the doubly warped metric.

Every function returns plain ``dict`` records (stable key order) of floats and
booleans so that the harness can serialise them directly.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property, lru_cache

import numpy as np

from . import exprs as ex
from . import riemann as rg
from . import submanifold as sm
from .dwp import DoublyWarpedProduct
from .exprs import Expr
from .submanifold import FieldAlong, ImmersionPoint, ImmersionSpec

__all__ = [
    "DwpImmersionScenario",
    "DwpPoint",
    "ScenarioError",
    "SpaceFormError",
    "a_h_closed_form_check",
    "compose_scenario",
    "h1_dot_h2_check",
    "h_decomposition_check",
    "minimality_check",
    "ni_geodesy_check",
    "norm_identity_check",
    "normal_fields",
    "partial_mean_curvature",
    "perpendicularity_check",
    "shape_operator_closed_form",
    "umbilical_check",
]

SPACE_FORM_TOL = 1e-6


class ScenarioError(ValueError):
    """The pieces of a scenario do not fit together."""


class SpaceFormError(ValueError):
    """A space-form check was requested without a declared curvature constant."""


@dataclass(frozen=True)
class DwpImmersionScenario:
    phi1: ImmersionSpec
    phi2: ImmersionSpec
    ambient: DoublyWarpedProduct
    c: float | None = None
    name: str = ""

    def __post_init__(self):
        if self.phi1.target != self.ambient.factor1 or self.phi2.target != self.ambient.factor2:
            raise ScenarioError("factor immersion targets must be the ambient factors")
        if set(self.phi1.source.coords) & set(self.phi2.source.coords):
            raise ScenarioError("source factor charts share coordinate names")

    @property
    def n1(self) -> int:
        return self.phi1.n

    @property
    def n2(self) -> int:
        return self.phi2.n

    @property
    def n(self) -> int:
        return self.n1 + self.n2

    def phi(self, i: int) -> ImmersionSpec:
        return (self.phi1, self.phi2)[i - 1]

    def rho(self, i: int) -> Expr:
        return self.ambient.warp(i)

    @cached_property
    def f1(self) -> Expr:
        return _compose(self.ambient.f1, self.phi1)

    @cached_property
    def f2(self) -> Expr:
        return _compose(self.ambient.f2, self.phi2)

    def f(self, i: int) -> Expr:
        return self.f1 if i == 1 else self.f2

    @cached_property
    def source(self) -> DoublyWarpedProduct:
        return DoublyWarpedProduct(self.phi1.source, self.phi2.source, self.f1, self.f2,
                                   (self.name or "scenario") + "/source")

    @cached_property
    def immersion(self) -> ImmersionSpec:
        """The product map between the doubly warped charts."""
        return ImmersionSpec(self.source.product, self.ambient.product,
                             self.phi1.components + self.phi2.components, (self.name or "phi"))

    @cached_property
    def direct_immersion(self) -> ImmersionSpec:
        """The same map between the direct product charts."""
        return ImmersionSpec(self.source.direct, self.ambient.direct,
                             self.phi1.components + self.phi2.components, (self.name or "phi") + "/direct")

    def sample(self, count: int, seed: int, margin: float = 0.05) -> np.ndarray:
        return rg.sample_points(self.source.product, count, np.random.default_rng(seed), margin)

    def require_c(self) -> float:
        if self.c is None:
            raise SpaceFormError(f"scenario {self.name!r} declares no space-form constant c")
        return float(self.c)


def _compose(rho: Expr, phi: ImmersionSpec) -> Expr:
    return ex.substitute(rho, dict(zip(phi.target.coords, phi.components)))


def compose_scenario(phi1: ImmersionSpec, phi2: ImmersionSpec, ambient: DoublyWarpedProduct, *,
                     c: float | None = None, name: str = "", validate: bool = True,
                     samples: int = 12, seed: int = 0, iso_tol: float = sm.ISOMETRY_TOL) -> DwpImmersionScenario:
    """Assemble a scenario; with ``validate`` the isometry and space-form claims are checked at samples."""
    s = DwpImmersionScenario(phi1, phi2, ambient, c, name)
    pts = s.sample(samples, seed)
    s.source.check_positive(pts[:, : s.n1], pts[:, s.n1 :])
    if validate:
        validate_scenario(s, pts, iso_tol)
    return s


def validate_scenario(s: DwpImmersionScenario, points, iso_tol: float = sm.ISOMETRY_TOL) -> dict:
    """Isometry of factors and product map, and the declared curvature constant."""
    worst = {"phi1": 0.0, "phi2": 0.0, "product": 0.0}
    for p in np.atleast_2d(points):
        p1, p2 = p[: s.n1], p[s.n1 :]
        worst["phi1"] = max(worst["phi1"], sm.isometry_residual(s.phi1, p1))
        worst["phi2"] = max(worst["phi2"], sm.isometry_residual(s.phi2, p2))
        worst["product"] = max(worst["product"], sm.isometry_residual(s.immersion, p))
    for key, val in worst.items():
        if val > iso_tol:
            raise sm.ImmersionError(f"{key} of scenario {s.name!r} is not isometric: residual {val:.3e}")
    if s.c is not None:
        dev = space_form_deviation(s, points)
        if dev > SPACE_FORM_TOL:
            raise ScenarioError(
                f"ambient of {s.name!r} is not of constant curvature {s.c}: deviation {dev:.3e}"
            )
    return worst


def space_form_deviation(s: DwpImmersionScenario, points, seed: int = 0) -> float:
    """Largest ``|K̃ - c|`` over coordinate and random planes at the image points."""
    c = s.require_c()
    M = s.ambient.product
    rng = np.random.default_rng(seed)
    worst = 0.0
    for p in np.atleast_2d(points):
        y = s.immersion.map(p)
        g, _, rm = rg.curvature_data(M, y)
        m = M.dim
        planes = [(np.eye(m)[a], np.eye(m)[b]) for a in range(m) for b in range(a + 1, m)]
        planes += [tuple(rng.normal(size=(2, m))) for _ in range(4)]
        for u, v in planes:
            worst = max(worst, abs(rg.sectional_curvature(M, y, u, v, rm=rm, g=g) - c))
    return worst


# ---------------------------------------------------------------------------
# per-point data
# ---------------------------------------------------------------------------


@lru_cache(maxsize=256)
def _log_rho_gradient_program(W: DoublyWarpedProduct, i: int):
    return ex.Program([ex.diff(ex.log(W.warp(i)), c) for c in W.coords], W.coords)


class DwpPoint:
    """Geometry of a scenario at one source point, shared by all checks."""

    def __init__(self, s: DwpImmersionScenario, p, *, check_isometry: bool = True):
        self.s = s
        p = s.source.product.check_point(p)
        self.p = p
        self.p1, self.p2 = p[: s.n1], p[s.n1 :]
        g = rg.metric_at(s.source.product, p)
        n1, n = s.n1, s.n
        self.frame1 = np.array(rg.gram_schmidt(np.eye(n)[:n1], g))
        self.frame2 = np.array(rg.gram_schmidt(np.eye(n)[n1:], g))
        frame = np.vstack([self.frame1, self.frame2])
        self.geo = ImmersionPoint(s.immersion, p, frame=frame, check_isometry=check_isometry)
        self.geo0 = ImmersionPoint(s.direct_immersion, p, frame=frame, check_isometry=check_isometry)
        self.f = {1: ex.evaluate(s.f1, dict(zip(s.phi1.source.coords, self.p1))),
                  2: ex.evaluate(s.f2, dict(zip(s.phi2.source.coords, self.p2)))}
        self.dlog = {i: _log_rho_gradient_program(s.ambient, i)(self.geo.y) for i in (1, 2)}
        self.Dlog = {i: self.geo.normal_part(np.linalg.solve(self.geo.G, self.dlog[i])) for i in (1, 2)}

    def frame(self, i: int) -> np.ndarray:
        return self.frame1 if i == 1 else self.frame2

    def h(self, x, y):
        return self.geo.h(x, y)

    def h0(self, x, y):
        return self.geo0.h(x, y)

    def partial_mean(self, i: int) -> np.ndarray:
        fr = self.frame(i)
        return sum(self.h(e, e) for e in fr) / len(fr)

    def leaf_laplacian(self, i: int) -> float:
        """``Δ^i f_i`` on the leaf through the point (sign with positive spectrum)."""
        s = self.s
        Mi = s.phi(i).source
        pi = self.p1 if i == 1 else self.p2
        return rg.laplacian(Mi, s.f(i), pi) / self.f[3 - i] ** 2

    def leaf_hessian_operator(self, i: int, Z) -> np.ndarray:
        """``𝓗^{f_i}(Z)`` on the leaf ``N_i``; ``Z`` and the result are product components in ``D_i``."""
        s = self.s
        Mi = s.phi(i).source
        pi = self.p1 if i == 1 else self.p2
        blk = s.source.block(i)
        Hm = rg.hessian_matrix(Mi, s.f(i), pi)
        z = np.asarray(Z, dtype=float)[blk]
        out = np.zeros(s.n)
        for e in self.frame(i):
            out += float(z @ Hm @ e[blk]) * e
        return out

    def d_log_rho(self, i: int, v_ambient) -> float:
        """``v(ln ρ_i)`` for an ambient vector ``v``."""
        return float(self.dlog[i] @ np.asarray(v_ambient, dtype=float))


def _norm(geo: ImmersionPoint, v) -> float:
    return geo.norm(v)


# ---------------------------------------------------------------------------
# checks
# ---------------------------------------------------------------------------


def partial_mean_curvature(s: DwpImmersionScenario, i: int, p) -> np.ndarray:
    """``H_i = (1/n_i) Σ h(e_a, e_a)`` over an orthonormal frame of ``D_i``; ambient components."""
    if i not in (1, 2):
        raise ValueError("index must be 1 or 2")
    return DwpPoint(s, p).partial_mean(i)


def h_decomposition_check(s: DwpImmersionScenario, p, *, pt: DwpPoint | None = None) -> dict:
    """Mixed part of ``h`` and the two block identities ``h = h⁰ - g̃ D ln ρ_j``."""
    pt = pt or DwpPoint(s, p)
    geo = pt.geo
    mixed = max((_norm(geo, pt.h(x, z)) for x in pt.frame1 for z in pt.frame2), default=0.0)
    blocks = {}
    for i in (1, 2):
        j = 3 - i
        worst = 0.0
        for a, x in enumerate(pt.frame(i)):
            for y in pt.frame(i)[a:]:
                rhs = pt.h0(x, y) - float(x @ geo.g @ y) * pt.Dlog[j]
                worst = max(worst, _norm(geo, pt.h(x, y) - rhs))
        blocks[i] = worst
    return {"mixed": mixed, "block1": blocks[1], "block2": blocks[2]}


def _h_sq(geo: ImmersionPoint, hfun, frame) -> float:
    total = 0.0
    for x in frame:
        for y in frame:
            v = hfun(x, y)
            total += geo.ip(v, v)
    return total


def norm_identity_check(s: DwpImmersionScenario, p, *, pt: DwpPoint | None = None) -> dict:
    """``||h||² = ||h⁰||² + n1 ||D ln ρ2||² + n2 ||D ln ρ1||²`` and the lower bound it implies.

    Both squared norms use the doubly warped frame and ambient metric.
    """
    pt = pt or DwpPoint(s, p)
    geo = pt.geo
    frame = np.vstack([pt.frame1, pt.frame2])
    h_sq = _h_sq(geo, pt.h, frame)
    h0_sq = _h_sq(geo, pt.h0, frame)
    bound = s.n1 * geo.ip(pt.Dlog[2], pt.Dlog[2]) + s.n2 * geo.ip(pt.Dlog[1], pt.Dlog[1])
    residual = abs(h_sq - h0_sq - bound)
    return {
        "h_sq": h_sq,
        "h0_sq": h0_sq,
        "lower_bound": bound,
        "residual": residual,
        "relative_residual": residual / max(1.0, abs(h_sq)),
        "inequality_holds": h_sq >= bound - 1e-8 * max(1.0, abs(bound)),
        "gap": h_sq - bound,
    }


def _factor_points(s: DwpImmersionScenario, points, i: int) -> np.ndarray:
    pts = np.atleast_2d(points)
    return pts[:, : s.n1] if i == 1 else pts[:, s.n1 :]


def factor_classification(s: DwpImmersionScenario, points, i: int, tol: float = sm.CLASSIFY_TOL):
    return sm.classify(s.phi(i), _factor_points(s, points, i), tol)


def ni_geodesy_check(s: DwpImmersionScenario, i: int, points, tol: float = sm.CLASSIFY_TOL) -> dict:
    """Both sides of: N_i-totally geodesic ⟺ φ_i totally geodesic and ``D ln ρ_j = 0``."""
    j = 3 - i
    direct = 0.0
    dlog = 0.0
    for p in np.atleast_2d(points):
        pt = DwpPoint(s, p)
        fr = pt.frame(i)
        for a, x in enumerate(fr):
            for y in fr[a:]:
                direct = max(direct, _norm(pt.geo, pt.h(x, y)))
        dlog = max(dlog, _norm(pt.geo, pt.Dlog[j]))
    fac = factor_classification(s, points, i, tol)
    lhs = sm.verdict(direct, tol)
    rhs_dlog = sm.verdict(dlog, tol)
    rhs = _and(fac.totally_geodesic, rhs_dlog)
    return {
        "index": i,
        "direct_residual": direct,
        "factor_geodesic_residual": fac.geodesic_residual,
        "dlog_residual": dlog,
        "ni_totally_geodesic": lhs,
        "factor_side": rhs,
        "consistent": _consistent(lhs, rhs),
    }


def totally_geodesic_check(s: DwpImmersionScenario, points, tol: float = sm.CLASSIFY_TOL) -> dict:
    """Totally geodesic ⟺ N1- and N2-totally geodesic."""
    whole = sm.classify(s.immersion, points, tol)
    parts = [ni_geodesy_check(s, i, points, tol)["ni_totally_geodesic"] for i in (1, 2)]
    rhs = _and(*parts)
    return {
        "geodesic_residual": whole.geodesic_residual,
        "totally_geodesic": whole.totally_geodesic,
        "n1_and_n2": rhs,
        "consistent": _consistent(whole.totally_geodesic, rhs),
    }


def _and(*flags):
    if any(f is False for f in flags):
        return False
    if any(f is None for f in flags):
        return None
    return True


def _consistent(a, b):
    if a is None or b is None:
        return None
    return a == b


def _factor_dlog(s: DwpImmersionScenario, i: int, q) -> tuple[np.ndarray, ImmersionPoint]:
    """Factor-level ``D ln ρ_i`` of ``φ_i`` (normal part in ``(M_i, g̃_i)``) at factor point ``q``."""
    geo = ImmersionPoint(s.phi(i), q)
    Mi = s.ambient.factor(i)
    grad = ex.Program([ex.diff(ex.log(s.rho(i)), c) for c in Mi.coords], Mi.coords)(geo.y)
    return geo.normal_part(np.linalg.solve(geo.G, grad)), geo


def umbilical_check(s: DwpImmersionScenario, points, tol: float = sm.CLASSIFY_TOL) -> dict:
    """Both sides of the umbilicity characterisation with ``H = -(D ln ρ1 + D ln ρ2)``."""
    comp_umb = comp_h = 0.0
    fac_umb = {1: 0.0, 2: 0.0}
    fac_h = {1: 0.0, 2: 0.0}
    for p in np.atleast_2d(points):
        pt = DwpPoint(s, p)
        comp_umb = max(comp_umb, sm.umbilicity_residual(pt.geo))
        H = pt.geo.mean_curvature()
        comp_h = max(comp_h, _norm(pt.geo, H + pt.Dlog[1] + pt.Dlog[2]))
        for i, q in ((1, pt.p1), (2, pt.p2)):
            d, geo = _factor_dlog(s, i, q)
            fac_umb[i] = max(fac_umb[i], sm.umbilicity_residual(geo))
            fac_h[i] = max(fac_h[i], geo.norm(geo.mean_curvature() + d))
    lhs = _and(sm.verdict(comp_umb, tol), sm.verdict(comp_h, tol))
    rhs = _and(*(sm.verdict(fac_umb[i], tol) for i in (1, 2)), *(sm.verdict(fac_h[i], tol) for i in (1, 2)))
    return {
        "composite_umbilical_residual": comp_umb,
        "composite_mean_curvature_residual": comp_h,
        "factor1_umbilical_residual": fac_umb[1],
        "factor2_umbilical_residual": fac_umb[2],
        "factor1_mean_curvature_residual": fac_h[1],
        "factor2_mean_curvature_residual": fac_h[2],
        "umbilical": lhs,
        "factor_side": rhs,
        "consistent": _consistent(lhs, rhs),
    }


def factor_mean_curvature_relation(s: DwpImmersionScenario, p, *, literal: bool = False,
                                   pt: DwpPoint | None = None) -> dict:
    """Residuals of ``H^{φ_i} = (n_j/n_i) w² D ln ρ_i`` for both factors.

    ``w = f_j`` (the warp scaling the factor's block) is the relation forced by
    ``trace h = 0``; ``literal=True`` uses ``w = f_i`` instead, for comparison.
    Residuals are measured in the factor metric.
    """
    pt = pt or DwpPoint(s, p)
    out = {}
    for i in (1, 2):
        j = 3 - i
        q = pt.p1 if i == 1 else pt.p2
        geo_i = ImmersionPoint(s.phi(i), q)
        blk = s.ambient.block(i)
        w = pt.f[i] if literal else pt.f[j]
        ni, nj = (s.n1, s.n2) if i == 1 else (s.n2, s.n1)
        target = (nj / ni) * w ** 2 * pt.Dlog[i][blk]
        out[f"factor{i}"] = geo_i.norm(geo_i.mean_curvature() - target)
    return out


def minimal_trace_residual(s: DwpImmersionScenario, p, *, literal: bool = False,
                           pt: DwpPoint | None = None) -> float:
    """``|| tr_{g1} h1⁰ / w1² + tr_{g2} h2⁰ / w2² - n1 D ln ρ2 - n2 D ln ρ1 - n H ||``.

    ``w1 = f2, w2 = f1`` make this an identity (zero for minimal ``φ``); the
    literal variant uses ``w_i = f_i``.
    """
    pt = pt or DwpPoint(s, p)
    geo = pt.geo
    total = -s.n1 * pt.Dlog[2] - s.n2 * pt.Dlog[1] - s.n * geo.mean_curvature()
    for i in (1, 2):
        Ni = s.phi(i).source
        qi = pt.p1 if i == 1 else pt.p2
        gi = rg.metric_at(Ni, qi)
        blk = s.source.block(i)
        tr = np.zeros(s.ambient.dim)
        for e in rg.gram_schmidt(np.eye(Ni.dim), gi):
            v = np.zeros(s.n)
            v[blk] = e
            tr += pt.h0(v, v)
        w = pt.f[i] if literal else pt.f[3 - i]
        total = total + tr / w ** 2
    return _norm(geo, total)


def minimality_check(s: DwpImmersionScenario, points, tol: float = sm.CLASSIFY_TOL,
                     relation_tol: float = 1e-5) -> dict:
    """Partial and global minimality characterisations, each side computed separately."""
    pts = np.atleast_2d(points)
    partial = {1: 0.0, 2: 0.0}
    dlog = {1: 0.0, 2: 0.0}
    mean = 0.0
    rel = {"factor1": 0.0, "factor2": 0.0}
    rel_lit = {"factor1": 0.0, "factor2": 0.0}
    trace = trace_lit = 0.0
    for p in pts:
        pt = DwpPoint(s, p)
        for i in (1, 2):
            partial[i] = max(partial[i], _norm(pt.geo, pt.partial_mean(i)))
            dlog[i] = max(dlog[i], _norm(pt.geo, pt.Dlog[i]))
        mean = max(mean, _norm(pt.geo, pt.geo.mean_curvature()))
        for key, val in factor_mean_curvature_relation(s, p, pt=pt).items():
            rel[key] = max(rel[key], val)
        for key, val in factor_mean_curvature_relation(s, p, literal=True, pt=pt).items():
            rel_lit[key] = max(rel_lit[key], val)
        trace = max(trace, minimal_trace_residual(s, p, pt=pt))
        trace_lit = max(trace_lit, minimal_trace_residual(s, p, literal=True, pt=pt))
    out = {}
    for i in (1, 2):
        j = 3 - i
        fac = factor_classification(s, pts, i, tol)
        lhs = sm.verdict(partial[i], tol)
        rhs = _and(fac.minimal, sm.verdict(dlog[j], tol))
        out[f"n{i}_minimal"] = lhs
        out[f"n{i}_factor_side"] = rhs
        out[f"n{i}_consistent"] = _consistent(lhs, rhs)
        out[f"n{i}_partial_mean_residual"] = partial[i]
    minimal = sm.verdict(mean, tol)
    relation = _and(sm.verdict(rel["factor1"], relation_tol), sm.verdict(rel["factor2"], relation_tol))
    out.update({
        "mean_curvature_norm": mean,
        "minimal": minimal,
        "factor_relation_residual_1": rel["factor1"],
        "factor_relation_residual_2": rel["factor2"],
        "factor_relation": relation,
        "minimal_consistent": _consistent(minimal, relation),
        "literal_relation_residual_1": rel_lit["factor1"],
        "literal_relation_residual_2": rel_lit["factor2"],
        "trace_identity_residual": trace,
        "literal_trace_residual": trace_lit,
    })
    return out


# ---------------------------------------------------------------------------
# shape operators along factor-aligned normals
# ---------------------------------------------------------------------------


@lru_cache(maxsize=128)
def normal_fields(s: DwpImmersionScenario, i: int) -> tuple[FieldAlong, ...]:
    """Factor-aligned normal fields ``η = e_A - J(JᵀGJ)⁻¹JᵀG e_A`` for each ambient axis of ``M_i``.

    Each depends on ``N_i`` coordinates only and is zero in the other block.
    """
    phi = s.phi(i)
    Ni, Mi = phi.source, phi.target
    sub = dict(zip(Mi.coords, phi.components))
    G = [[ex.substitute(e, sub) for e in row] for row in Mi.metric]
    J = [[ex.diff(comp, c) for c in Ni.coords] for comp in phi.components]
    m, n = Mi.dim, Ni.dim
    JtG = [[sum((J[C][a] * G[C][D] for C in range(m)), ex.ZERO) for D in range(m)] for a in range(n)]
    pull = [[sum((JtG[a][D] * J[D][b] for D in range(m)), ex.ZERO) for b in range(n)] for a in range(n)]
    pinv = rg.inverse_exprs(pull)
    fields = []
    other = s.ambient.factor(3 - i).dim
    for A in range(m):
        # w = (JᵀGJ)⁻¹ JᵀG e_A ;  η = e_A - J w
        w = [sum((pinv[a][b] * JtG[b][A] for b in range(n)), ex.ZERO) for a in range(n)]
        eta = [(ex.ONE if C == A else ex.ZERO) - sum((J[C][a] * w[a] for a in range(n)), ex.ZERO) for C in range(m)]
        comps = eta + [ex.ZERO] * other if i == 1 else [ex.ZERO] * other + eta
        fields.append(FieldAlong(tuple(comps), s.source.coords))
    return tuple(fields)


def shape_operator_closed_form(s: DwpImmersionScenario, p, eta: FieldAlong, i: int, X) -> dict:
    """Closed-form ``A_η X`` and ``D_X η`` for ``η`` normal and tangent to ``M_i``, next to direct values.

    Returns source components of both shape-operator values and ambient
    components of both normal-connection values.
    """
    pt = DwpPoint(s, p)
    return _shape_closed_form(pt, eta, i, X)


def _shape_closed_form(pt: DwpPoint, eta: FieldAlong, i: int, X) -> dict:
    s = pt.s
    j = 3 - i
    x = np.asarray(X, dtype=float)
    val, _ = eta.jet(pt.p)
    off = val[s.ambient.block(j)]
    if np.any(np.abs(off) > 0):
        raise ValueError(f"η is not tangent to factor {i}")
    pt.geo.check_normal(val)
    xi = np.zeros(s.n)
    xi[s.source.block(i)] = x[s.source.block(i)]
    xj = x - xi
    # direct computations on the doubly warped immersion
    A_direct = _shape_apply_coords(pt.geo, pt.h, val, x)
    D_direct = pt.geo.normal_connection(x, eta)
    # closed forms from the direct-product immersion
    A_closed = _shape_apply_coords(pt.geo0, pt.h0, val, xi) - pt.d_log_rho(i, val) * xj
    D_closed = pt.geo0.normal_connection(xi, eta) + pt.d_log_rho(j, pt.geo.J @ xj) * val
    return {
        "A_direct": A_direct,
        "A_closed": A_closed,
        "D_direct": D_direct,
        "D_closed": D_closed,
        "A_residual": float(np.sqrt(max((A_direct - A_closed) @ pt.geo.g @ (A_direct - A_closed), 0.0))),
        "D_residual": _norm(pt.geo, D_direct - D_closed),
    }


def _shape_apply_coords(geo: ImmersionPoint, hfun, eta, x) -> np.ndarray:
    """``A_η x`` via ``g⁻¹ [<h(x, ∂_b), η>]_b`` in the immersion's own metrics."""
    n = geo.phi.n
    rhs = np.array([geo.ip(hfun(x, np.eye(n)[b]), eta) for b in range(n)])
    return np.linalg.solve(geo.g, rhs)


def shape_closed_form_residuals(s: DwpImmersionScenario, p, *, pt: DwpPoint | None = None,
                          min_norm: float = 1e-3) -> dict:
    """Worst residual of each of the four closed forms over the available normal fields and frame vectors."""
    pt = pt or DwpPoint(s, p)
    worst = {"A_eta1": 0.0, "A_eta2": 0.0, "D_eta1": 0.0, "D_eta2": 0.0}
    count = {1: 0, 2: 0}
    frame = np.vstack([pt.frame1, pt.frame2])
    tests = list(frame) + [frame.sum(axis=0)]
    for i in (1, 2):
        for eta in normal_fields(s, i):
            val, _ = eta.jet(pt.p)
            if pt.geo.norm(val) < min_norm:
                continue
            count[i] += 1
            for x in tests:
                r = _shape_closed_form(pt, eta, i, x)
                worst[f"A_eta{i}"] = max(worst[f"A_eta{i}"], r["A_residual"])
                worst[f"D_eta{i}"] = max(worst[f"D_eta{i}"], r["D_residual"])
    worst["normals1"] = count[1]
    worst["normals2"] = count[2]
    return worst


# ---------------------------------------------------------------------------
# space-form relations
# ---------------------------------------------------------------------------


def h1_dot_h2_check(s: DwpImmersionScenario, p, *, pt: DwpPoint | None = None) -> dict:
    """``<H1, H2>`` against ``Δ¹f1/(n1 f1) + Δ²f2/(n2 f2) - c``."""
    c = s.require_c()
    pt = pt or DwpPoint(s, p)
    H1, H2 = pt.partial_mean(1), pt.partial_mean(2)
    lhs = pt.geo.ip(H1, H2)
    t1 = pt.leaf_laplacian(1) / (s.n1 * pt.f[1])
    t2 = pt.leaf_laplacian(2) / (s.n2 * pt.f[2])
    rhs = t1 + t2 - c
    return {"inner_product": lhs, "laplacian_term1": t1, "laplacian_term2": t2, "c": c,
            "rhs": rhs, "residual": abs(lhs - rhs)}


def perpendicularity_check(s: DwpImmersionScenario, p, tol: float = 1e-6, *, pt: DwpPoint | None = None) -> dict:
    """``H1 ⟂ H2`` ⟺ ``Δ¹f1/(n1 f1) + Δ²f2/(n2 f2) = c``, each side evaluated on its own."""
    r = h1_dot_h2_check(s, p, pt=pt)
    lhs = sm.verdict(abs(r["inner_product"]), tol)
    rhs = sm.verdict(abs(r["laplacian_term1"] + r["laplacian_term2"] - r["c"]), tol)
    return {"inner_product": r["inner_product"], "laplacian_sum_minus_c": r["laplacian_term1"] + r["laplacian_term2"] - r["c"],
            "perpendicular": lhs, "laplacian_side": rhs, "consistent": _consistent(lhs, rhs)}


def a_h_closed_form_check(s: DwpImmersionScenario, p, *, pt: DwpPoint | None = None) -> dict:
    """``A_{H_i} Z = -𝓗^{f_j}(Z)/f_j + (Δ^i f_i/(n_i f_i) - c) Z`` for ``Z`` in ``D_j``, per frame vector."""
    c = s.require_c()
    pt = pt or DwpPoint(s, p)
    out = {}
    for i in (1, 2):
        j = 3 - i
        Hi = pt.partial_mean(i)
        lap = pt.leaf_laplacian(i) / ((s.n1 if i == 1 else s.n2) * pt.f[i])
        worst = 0.0
        for z in pt.frame(j):
            direct = _shape_apply_coords(pt.geo, pt.h, Hi, z)
            closed = -pt.leaf_hessian_operator(j, z) / pt.f[j] + (lap - c) * z
            d = direct - closed
            worst = max(worst, float(np.sqrt(max(d @ pt.geo.g @ d, 0.0))))
        out[f"A_H{i}"] = worst
    return out
