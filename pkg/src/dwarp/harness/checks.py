"""Named checks over a loaded scenario, and the runner that orders and isolates them."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np

from .. import chenineq as ci
from .. import dwp as dwpmod
from .. import dwpimm as di
from .. import exprs as ex
from .. import riemann as rg
from .. import submanifold as sm
from .report import CheckRecord, CheckReport

__all__ = ["CHECKS", "DEFAULT_BUDGET", "RunContext", "run_checks", "sample_scenario_points"]

DEFAULT_BUDGET = 256
IDENTITY_TOL = 1e-6


@dataclass(frozen=True)
class CheckSpec:
    fn: Callable
    anchor: str
    tol: float
    needs_isometry: bool = True


CHECKS: dict[str, CheckSpec] = {}


def _check(name: str, anchor: str, tol: float = IDENTITY_TOL, needs_isometry: bool = True):
    def deco(fn):
        CHECKS[name] = CheckSpec(fn, anchor, tol, needs_isometry)
        return fn

    return deco


def sample_scenario_points(s: di.DwpImmersionScenario, count: int, seed: int) -> np.ndarray:
    return s.sample(count, seed)


@dataclass
class RunContext:
    sf: object  # ScenarioFile
    seed: int
    points_count: int
    budget: int = DEFAULT_BUDGET
    tol_override: float | None = None
    _pts: dict = field(default_factory=dict)

    @property
    def s(self) -> di.DwpImmersionScenario:
        return self.sf.scenario

    @cached_property
    def points(self) -> np.ndarray:
        return sample_scenario_points(self.s, self.points_count, self.seed)

    def pt(self, k: int) -> di.DwpPoint:
        if k not in self._pts:
            self._pts[k] = di.DwpPoint(self.s, self.points[k], check_isometry=False)
        return self._pts[k]

    def rng(self, name: str) -> np.random.Generator:
        # independent stream per check so that selecting checks never shifts draws
        return np.random.default_rng([self.seed, sum(ord(ch) * 31 ** k for k, ch in enumerate(name)) % (2 ** 32)])

    def dwps(self):
        s = self.s
        pts = self.points
        images = np.array([s.immersion.map(p) for p in pts])
        return (("source", s.source, pts), ("ambient", s.ambient, images))


def _rec(name, point=None, values=None, residual=None, tol=None, rule="band", verdict="", message=""):
    return CheckRecord(name, CHECKS[name].anchor, point, values or {}, residual, tol, rule, verdict, message)


def _worst(pairs):
    """``pairs`` is an iterable of (residual, point); returns the max and its point."""
    best, where = 0.0, None
    for r, p in pairs:
        if where is None or r > best:
            best, where = float(r), p
    return best, where


def _random_lifted_field(W: dwpmod.DoublyWarpedProduct, rng: np.random.Generator) -> rg.VectorField:
    comps = []
    for i in (1, 2):
        M = W.factor(i)
        for _ in range(M.dim):
            a = rng.normal(size=M.dim + 2)
            e = ex.const(a[0])
            for k, c in enumerate(M.coords):
                e = e + ex.const(a[k + 1]) * ex.var(c)
            e = e + ex.const(0.3 * a[-1]) * ex.var(M.coords[0]) ** 2
            comps.append(e)
    return rg.VectorField(tuple(comps), W.coords)


def _skip_without_c(name, ctx):
    if ctx.s.c is None:
        return [_rec(name, rule="none", verdict="skipped", message="scenario declares no space-form constant c")]
    return None


# ---------------------------------------------------------------------------
# ambient-level checks
# ---------------------------------------------------------------------------


@_check("isometry", "isometric immersion of the factors and the product map", 1e-8, needs_isometry=False)
def _isometry(ctx, tol):
    s = ctx.s
    out = []
    for label, phi, sl in (("phi1", s.phi1, slice(0, s.n1)), ("phi2", s.phi2, slice(s.n1, s.n)),
                           ("product", s.immersion, slice(0, s.n))):
        r, where = _worst((sm.isometry_residual(phi, p[sl]), p) for p in ctx.points)
        out.append(_rec("isometry", where, {"map": label}, r, tol, "bound"))
    return out


@_check("warp_positivity", "warping functions are positive", 0.0, needs_isometry=False)
def _warp_positivity(ctx, tol):
    s = ctx.s
    out = []
    for label, W, pts in ctx.dwps():
        for i in (1, 2):
            prog = ex.Program([W.warp(i)], W.factor(i).coords)
            vals = [(float(prog(p[W.block(i)])[0]), p) for p in pts]
            low, where = min(vals, key=lambda t: t[0])
            out.append(_rec("warp_positivity", where, {"dwp": label, "warp": f"f{i}", "minimum": low, "ok": low > tol},
                            rule="flag"))
    return out


@_check("u_field", "closed-form U_i equals minus the gradient of ln f_i", needs_isometry=False)
def _u_field(ctx, tol):
    out = []
    for label, W, pts in ctx.dwps():
        for i in (1, 2):
            U = dwpmod.u_field(W, i)
            psi = ex.log(W.warp(i))
            r, where = _worst((float(np.max(np.abs(U.at(p) + rg.gradient(W.product, psi, p)))), p) for p in pts)
            out.append(_rec("u_field", where, {"dwp": label, "index": i}, r, tol))
    return out


@_check("connection_closed_form", "doubly warped connection from the direct product connection", needs_isometry=False)
def _connection(ctx, tol):
    rng = ctx.rng("connection_closed_form")
    out = []
    for label, W, pts in ctx.dwps():
        worst = []
        for p in pts:
            X, Y = _random_lifted_field(W, rng), _random_lifted_field(W, rng)
            direct = rg.covariant_derivative(W.product, X, Y, p)
            closed = dwpmod.dwp_connection_closed_form(W, X, Y, p)
            worst.append((float(np.max(np.abs(direct - closed))), p))
        r, where = _worst(worst)
        out.append(_rec("connection_closed_form", where, {"dwp": label, "draws": len(worst)}, r, tol))
    return out


@_check("curvature_closed_form", "doubly warped curvature from U_1, U_2 and wedge terms", needs_isometry=False)
def _curvature(ctx, tol):
    rng = ctx.rng("curvature_closed_form")
    out = []
    for label, W, pts in ctx.dwps():
        worst = []
        for p in pts:
            x, y, z = rng.normal(size=(3, W.dim))
            direct = rg.riemann_tensor(W.product, x, y, z, p)
            closed = dwpmod.dwp_curvature_closed_form(W, x, y, z, p)
            worst.append((float(np.max(np.abs(direct - closed))), p))
        r, where = _worst(worst)
        out.append(_rec("curvature_closed_form", where, {"dwp": label, "draws": len(worst)}, r, tol))
    return out


@_check("wedge", "wedge operator identities", 1e-9, needs_isometry=False)
def _wedge(ctx, tol):
    rng = ctx.rng("wedge")
    out = []
    W = ctx.s.ambient
    pts = ctx.dwps()[1][2]
    alg = []
    for y in pts:
        g = rg.metric_at(W.product, y)
        a, b, c, d = rng.normal(size=(4, W.dim))
        r1 = np.max(np.abs(dwpmod.wedge(a, b, c, g) + dwpmod.wedge(b, a, c, g)))
        r2 = abs(dwpmod.wedge(a, b, c, g) @ g @ d + dwpmod.wedge(a, b, d, g) @ g @ c)
        alg.append((max(r1, r2), y))
    r, where = _worst(alg)
    out.append(_rec("wedge", where, {"identity": "skew symmetry"}, r, tol))
    if ctx.s.c is not None:
        c = float(ctx.s.c)
        sf = []
        for y in pts:
            g = rg.metric_at(W.product, y)
            a, b, z = rng.normal(size=(3, W.dim))
            R = rg.riemann_tensor(W.product, a, b, z, y)
            sf.append((float(np.max(np.abs(R - c * dwpmod.wedge(a, b, z, g)))), y))
        r, where = _worst(sf)
        out.append(_rec("wedge", where, {"identity": "constant curvature tensor", "c": c}, r, IDENTITY_TOL))
    return out


@_check("mixed_sectional", "mixed sectional curvature from factor Hessians of the warps", needs_isometry=False)
def _mixed_sectional(ctx, tol):
    rng = ctx.rng("mixed_sectional")
    out = []
    for label, W, pts in ctx.dwps():
        worst = []
        for p in pts:
            g = rg.metric_at(W.product, p)
            x = dwpmod.lift_vector(W, 1, rng.normal(size=W.n1))
            z = dwpmod.lift_vector(W, 2, rng.normal(size=W.n2))
            x /= np.sqrt(x @ g @ x)
            z /= np.sqrt(z @ g @ z)
            direct = rg.sectional_curvature(W.product, p, x, z)
            closed = dwpmod.mixed_sectional_closed_form(W, p, x, z)
            worst.append((abs(direct - closed), p))
        r, where = _worst(worst)
        out.append(_rec("mixed_sectional", where, {"dwp": label}, r, tol))
    return out


@_check("space_form", "ambient has the declared constant curvature", di.SPACE_FORM_TOL, needs_isometry=False)
def _space_form(ctx, tol):
    skip = _skip_without_c("space_form", ctx)
    if skip:
        return skip
    dev = di.space_form_deviation(ctx.s, ctx.points, ctx.seed)
    return [_rec("space_form", None, {"c": ctx.s.c}, dev, tol)]


# ---------------------------------------------------------------------------
# submanifold checks on the product immersion
# ---------------------------------------------------------------------------


@_check("gauss_equation", "Gauss equation")
def _gauss(ctx, tol):
    rng = ctx.rng("gauss_equation")
    s = ctx.s
    out = []
    variants = [None] if s.c is None else [None, float(s.c)]
    for c in variants:
        worst = []
        for p in ctx.points:
            X, Y, Z, W = rng.normal(size=(4, s.n))
            worst.append((sm.gauss_equation_residual(s.immersion, p, X, Y, Z, W, c), p))
        r, where = _worst(worst)
        out.append(_rec("gauss_equation", where, {"ambient_term": "computed" if c is None else f"constant {c}"}, r, tol))
    return out


@_check("second_fundamental_form", "second fundamental form is symmetric and normal", 1e-9)
def _sff(ctx, tol):
    worst = []
    for k, p in enumerate(ctx.points):
        geo = ctx.pt(k).geo
        fr = geo.frame
        r = 0.0
        for a in range(len(fr)):
            for b in range(len(fr)):
                hab = geo.h(fr[a], fr[b])
                r = max(r, geo.norm(hab - geo.h(fr[b], fr[a])), geo.norm(geo.tangent_part(hab)))
        worst.append((r, p))
    r, where = _worst(worst)
    return [_rec("second_fundamental_form", where, {}, r, tol)]


@_check("weingarten", "Weingarten formula for factor-aligned normal fields")
def _weingarten(ctx, tol):
    s = ctx.s
    worst = []
    for k, p in enumerate(ctx.points):
        geo = ctx.pt(k).geo
        for i in (1, 2):
            for eta in di.normal_fields(s, i):
                val, _ = eta.jet(p)
                if geo.norm(val) < 1e-3:
                    continue
                for x in geo.frame:
                    tangential = geo.tangent_part(geo.ambient_derivative(x, eta))
                    A = geo.J @ geo.shape_apply(val, x)
                    worst.append((geo.norm(tangential + A), p))
    r, where = _worst(worst)
    return [_rec("weingarten", where, {"evaluations": len(worst)}, r, tol)]


@_check("mean_curvature", "mean curvature does not depend on the orthonormal frame", 1e-9)
def _mean_curvature(ctx, tol):
    s = ctx.s
    worst = []
    for k, p in enumerate(ctx.points):
        pt = ctx.pt(k)
        H = pt.geo.mean_curvature()
        order = list(range(s.n))[::-1]
        other = sm.ImmersionPoint(s.immersion, p, frame=rg.orthonormal_frame(s.source.product, p, order),
                                  check_isometry=False).mean_curvature()
        worst.append((pt.geo.norm(H - other), p))
    r, where = _worst(worst)
    return [_rec("mean_curvature", where, {}, r, tol)]


def _expect_rec(name, flag, got, expected):
    if got is None:
        ok = None
    else:
        ok = got == expected
    return _rec(name, None, {"flag": flag, "expected": expected, "observed": got, "ok": ok}, rule="flag")


@_check("classification", "totally geodesic / totally umbilical / minimal classification", sm.CLASSIFY_TOL)
def _classification(ctx, tol):
    cls = sm.classify(ctx.s.immersion, ctx.points, tol, check_isometry=False)
    d = cls.as_dict()
    determinate = all(d[k] is not None for k in ("totally_geodesic", "totally_umbilical", "minimal"))
    out = [_rec("classification", None, {**d, "ok": True if determinate else None}, rule="flag")]
    for flag in ("totally_geodesic", "totally_umbilical", "minimal"):
        if flag in ctx.sf.expectations:
            out.append(_expect_rec("classification", flag, d[flag], ctx.sf.expectations[flag]))
    return out


# ---------------------------------------------------------------------------
# doubly warped immersion checks
# ---------------------------------------------------------------------------


@_check("partial_mean_curvature", "mean curvature splits into weighted partial mean curvatures", 1e-9)
def _partial(ctx, tol):
    s = ctx.s
    worst = []
    for k, p in enumerate(ctx.points):
        pt = ctx.pt(k)
        H = pt.geo.mean_curvature()
        worst.append((pt.geo.norm(s.n1 * pt.partial_mean(1) + s.n2 * pt.partial_mean(2) - s.n * H), p))
    r, where = _worst(worst)
    return [_rec("partial_mean_curvature", where, {}, r, tol)]


@_check("mixed_totally_geodesic", "doubly warped immersions are mixed totally geodesic", 1e-8)
def _mixed_tg(ctx, tol):
    r, where = _worst((di.h_decomposition_check(ctx.s, p, pt=ctx.pt(k))["mixed"], p) for k, p in enumerate(ctx.points))
    out = [_rec("mixed_totally_geodesic", where, {}, r, tol)]
    if "mixed_totally_geodesic" in ctx.sf.expectations:
        out.append(_expect_rec("mixed_totally_geodesic", "mixed_totally_geodesic",
                               sm.verdict(r, tol), ctx.sf.expectations["mixed_totally_geodesic"]))
    return out


@_check("h_decomposition", "block decomposition of h through the log-warp normal gradients")
def _h_decomp(ctx, tol):
    out = []
    for block in ("block1", "block2"):
        r, where = _worst((di.h_decomposition_check(ctx.s, p, pt=ctx.pt(k))[block], p) for k, p in enumerate(ctx.points))
        out.append(_rec("h_decomposition", where, {"block": block}, r, tol))
    return out


@_check("norm_identity", "squared norm of h splits into the direct part and log-warp terms")
def _norm_identity(ctx, tol):
    s = ctx.s
    rows = [(di.norm_identity_check(s, p, pt=ctx.pt(k)), p) for k, p in enumerate(ctx.points)]
    r, where = _worst((row["relative_residual"], p) for row, p in rows)
    out = [_rec("norm_identity", where, {}, r, tol)]
    holds = all(row["inequality_holds"] for row, _ in rows)
    out.append(_rec("norm_identity", None, {"relation": "lower bound holds", "ok": holds}, rule="flag"))
    h0 = max(row["h0_sq"] for row, _ in rows)
    equality = sm.verdict(np.sqrt(h0), sm.CLASSIFY_TOL)
    fac = [di.factor_classification(s, ctx.points, i).totally_geodesic for i in (1, 2)]
    both = di._and(*fac)
    out.append(_rec("norm_identity", None, {
        "relation": "equality iff both factors totally geodesic",
        "direct_part_norm": float(np.sqrt(h0)),
        "equality": equality,
        "factors_totally_geodesic": both,
        "ok": di._consistent(equality, both),
    }, rule="flag"))
    return out


@_check("ni_totally_geodesic", "N_i-total geodesy characterisation", sm.CLASSIFY_TOL)
def _ni_tg(ctx, tol):
    out = []
    for i in (1, 2):
        d = di.ni_geodesy_check(ctx.s, i, ctx.points, tol)
        out.append(_rec("ni_totally_geodesic", None, {**d, "ok": d["consistent"]}, rule="flag"))
    d = di.totally_geodesic_check(ctx.s, ctx.points, tol)
    out.append(_rec("ni_totally_geodesic", None, {**d, "index": "both", "ok": d["consistent"]}, rule="flag"))
    return out


@_check("umbilical", "total umbilicity characterisation", sm.CLASSIFY_TOL)
def _umbilical(ctx, tol):
    d = di.umbilical_check(ctx.s, ctx.points, tol)
    return [_rec("umbilical", None, {**d, "ok": d["consistent"]}, rule="flag")]


@_check("minimality", "minimality characterisations and the factor mean curvature relation", sm.CLASSIFY_TOL)
def _minimality(ctx, tol):
    d = di.minimality_check(ctx.s, ctx.points, tol)
    out = []
    for i in (1, 2):
        out.append(_rec("minimality", None, {
            "relation": f"N{i}-minimal iff factor minimal and log-warp gradient vanishes",
            "partial_mean_residual": d[f"n{i}_partial_mean_residual"],
            "n_minimal": d[f"n{i}_minimal"], "factor_side": d[f"n{i}_factor_side"],
            "ok": d[f"n{i}_consistent"],
        }, rule="flag"))
    out.append(_rec("minimality", None, {
        "relation": "minimal iff factor mean curvature relation",
        "mean_curvature_norm": d["mean_curvature_norm"], "minimal": d["minimal"],
        "factor_relation_residual_1": d["factor_relation_residual_1"],
        "factor_relation_residual_2": d["factor_relation_residual_2"],
        "factor_relation": d["factor_relation"], "ok": d["minimal_consistent"],
    }, rule="flag"))
    out.append(_rec("minimality", None, {"relation": "trace identity"}, d["trace_identity_residual"], IDENTITY_TOL))
    out.append(_rec("minimality", None, {
        "relation": "factor relation with the factor's own warp",
        "residual_1": d["literal_relation_residual_1"], "residual_2": d["literal_relation_residual_2"],
        "trace_residual": d["literal_trace_residual"],
    }, rule="none", verdict="info"))
    if "mean_curvature_norm" in ctx.sf.expectations:
        want = ctx.sf.expectations["mean_curvature_norm"]
        out.append(_rec("minimality", None, {"relation": "expected mean curvature norm", "expected": want,
                                             "observed": d["mean_curvature_norm"]},
                        abs(d["mean_curvature_norm"] - want), tol))
    if "minimal" in ctx.sf.expectations:
        out.append(_expect_rec("minimality", "minimal", d["minimal"], ctx.sf.expectations["minimal"]))
    return out


@_check("shape_operator_closed_form", "shape operators and normal connection of factor-aligned normals")
def _shape(ctx, tol):
    out = []
    rows = [(di.shape_closed_form_residuals(ctx.s, p, pt=ctx.pt(k)), p) for k, p in enumerate(ctx.points)]
    for key in ("A_eta1", "A_eta2", "D_eta1", "D_eta2"):
        r, where = _worst((row[key], p) for row, p in rows)
        idx = key[-1]
        count = sum(row[f"normals{idx}"] for row, _ in rows)
        out.append(_rec("shape_operator_closed_form", where, {"form": key, "normal_fields_used": count}, r, tol))
    return out


@_check("h1_dot_h2", "inner product of partial mean curvatures in a space form")
def _h1h2(ctx, tol):
    skip = _skip_without_c("h1_dot_h2", ctx)
    if skip:
        return skip
    s = ctx.s
    rows = [(di.h1_dot_h2_check(s, p, pt=ctx.pt(k)), p) for k, p in enumerate(ctx.points)]
    r, where = _worst((row["residual"], p) for row, p in rows)
    out = [_rec("h1_dot_h2", where, {}, r, tol)]
    perp = [di.perpendicularity_check(s, p, pt=ctx.pt(k)) for k, p in enumerate(ctx.points)]
    ok = di._and(*(row["consistent"] for row in perp))
    out.append(_rec("h1_dot_h2", None, {"relation": "perpendicular iff Laplacian terms sum to c",
                                        "perpendicular": [row["perpendicular"] for row in perp], "ok": ok},
                    rule="flag"))
    tags = set(ctx.sf.tags)
    inner, where = _worst((abs(row["inner_product"]), p) for row, p in rows)
    if "harmonic" in tags and s.c == 0:
        out.append(_rec("h1_dot_h2", where, {"relation": "harmonic warps in flat ambient are perpendicular"},
                        inner, 1e-8))
    if "eigenfunction" in tags and ctx.sf.eigenvalues is not None:
        lam = ctx.sf.eigenvalues
        if abs(lam[0] - s.n1 * s.c / 2) <= 1e-12 and abs(lam[1] - s.n2 * s.c / 2) <= 1e-12:
            out.append(_rec("h1_dot_h2", where, {"relation": "eigenvalues n_i c / 2 force perpendicularity"},
                            inner, IDENTITY_TOL))
    return out


@_check("a_h_closed_form", "shape operator along partial mean curvature vectors")
def _a_h(ctx, tol):
    skip = _skip_without_c("a_h_closed_form", ctx)
    if skip:
        return skip
    rows = [(di.a_h_closed_form_check(ctx.s, p, pt=ctx.pt(k)), p) for k, p in enumerate(ctx.points)]
    out = []
    for key in ("A_H1", "A_H2"):
        r, where = _worst((row[key], p) for row, p in rows)
        out.append(_rec("a_h_closed_form", where, {"operator": key}, r, tol))
    return out


# ---------------------------------------------------------------------------
# inequality checks
# ---------------------------------------------------------------------------


@_check("max_sectional", "maximum ambient sectional curvature over tangent 2-planes", 1e-12)
def _max_sectional(ctx, tol):
    s = ctx.s
    budget = max(ctx.budget, ci.MIN_BUDGET)
    lo = max(budget // 2, ci.MIN_BUDGET)
    monotone, repeat, sf_dev = [], [], []
    for k, p in enumerate(ctx.points):
        pt = ctx.pt(k)
        a = ci._estimate_max(pt, lo, ctx.seed).value
        b = ci._estimate_max(pt, budget, ctx.seed).value
        b2 = ci._estimate_max(pt, budget, ctx.seed).value
        monotone.append((max(a - b, 0.0), p))
        repeat.append((abs(b - b2), p))
        if s.c is not None:
            sf_dev.append((abs(b - s.c), p))
    out = []
    r, where = _worst(monotone)
    out.append(_rec("max_sectional", where, {"property": "non-decreasing in budget", "budgets": [lo, budget]}, r, 0.0,
                    "bound"))
    r, where = _worst(repeat)
    out.append(_rec("max_sectional", where, {"property": "deterministic for a fixed seed"}, r, 0.0, "bound"))
    if sf_dev:
        r, where = _worst(sf_dev)
        out.append(_rec("max_sectional", where, {"property": "sampled estimate equals c"}, r, IDENTITY_TOL))
    return out


def _inequality_records(name, reports, biconditional: bool):
    out = []
    worst, where = _worst(((r.lhs - r.rhs) / max(1.0, abs(r.lhs), abs(r.rhs)), r.point) for r in reports)
    out.append(_rec(name, where, {"property": "inequality holds",
                                  "min_gap": min(r.gap for r in reports),
                                  "curvature_source": reports[0].curvature_source},
                    worst, ci.SLACK_TOL, "bound"))
    eq_pts = [r for r in reports if r.equality]
    bad = [r.point for r in reports if r.equality and not r.equality_conditions]
    out.append(_rec(name, bad[0] if bad else None, {
        "property": "equality implies mixed total geodesy and n1 H1 = n2 H2",
        "equality_points": len(eq_pts), "ok": not bad,
    }, rule="flag"))
    if biconditional:
        bad = [r.point for r in reports if r.equality_conditions and not r.equality]
        out.append(_rec(name, bad[0] if bad else None, {
            "property": "mixed total geodesy and n1 H1 = n2 H2 imply equality", "ok": not bad,
        }, rule="flag"))
    spreads = [r.mixed_planes_at_max for r in eq_pts if r.mixed_planes_at_max is not None]
    if spreads:
        out.append(_rec(name, None, {"property": "mixed frame planes attain max curvature at equality (sampled)",
                                     "spread": max(spreads)}, rule="none", verdict="info"))
    return out


@_check("inequality_201", "warping-function inequality with sampled maximum curvature", ci.SLACK_TOL)
def _ineq201(ctx, tol):
    reports = [ci.inequality_201(ctx.s, p, max(ctx.budget, ci.MIN_BUDGET), ctx.seed, pt=ctx.pt(k))
               for k, p in enumerate(ctx.points)]
    out = _inequality_records("inequality_201", reports, biconditional=False)
    if "equality_201" in ctx.sf.expectations:
        out.append(_expect_rec("inequality_201", "equality_201", all(r.equality for r in reports),
                               ctx.sf.expectations["equality_201"]))
    return out


@_check("inequality_202", "warping-function inequality in a space form", ci.SLACK_TOL)
def _ineq202(ctx, tol):
    skip = _skip_without_c("inequality_202", ctx)
    if skip:
        return skip
    reports = [ci.inequality_202(ctx.s, p, pt=ctx.pt(k)) for k, p in enumerate(ctx.points)]
    out = _inequality_records("inequality_202", reports, biconditional=True)
    if "equality_202" in ctx.sf.expectations:
        out.append(_expect_rec("inequality_202", "equality_202", all(r.equality for r in reports),
                               ctx.sf.expectations["equality_202"]))
    tags = set(ctx.sf.tags)
    if "eigenfunction" in tags and ctx.sf.eigenvalues is not None:
        s = ctx.s
        lam = ctx.sf.eigenvalues
        if abs(lam[0] - s.n1 * s.c / 2) <= 1e-12 and abs(lam[1] - s.n2 * s.c / 2) <= 1e-12:
            bad = []
            for k, r in enumerate(reports):
                minimal = sm.verdict(ctx.pt(k).geo.norm(ctx.pt(k).geo.mean_curvature()), ci.HYPOTHESIS_TOL)
                if minimal is not None and minimal != r.equality:
                    bad.append(r.point)
            out.append(_rec("inequality_202", bad[0] if bad else None, {
                "property": "eigenvalues n_i c / 2: equality iff minimal", "ok": not bad}, rule="flag"))
    return out


@_check("obstruction", "non-existence content: minimal immersions with eigenfunction warps", ci.HYPOTHESIS_TOL)
def _obstruction(ctx, tol):
    try:
        d = ci.obstruction_probe(ctx.s, ctx.points, tags=ctx.sf.tags, eigenvalues=ctx.sf.eigenvalues,
                                 budget=max(ctx.budget, ci.MIN_BUDGET), seed=ctx.seed, tol=tol)
    except ci.HypothesisError as err:
        return [_rec("obstruction", None, {"residuals": err.residuals, "ok": False}, rule="flag", message=str(err))]
    if not d["applicable"]:
        return [_rec("obstruction", None, d, rule="none", verdict="info",
                     message="needs a minimal tag and harmonic or eigenfunction warps")]
    return [_rec("obstruction", None, {**d, "ok": d["consistent"]}, rule="flag")]


# ---------------------------------------------------------------------------
# runner
# ---------------------------------------------------------------------------


def run_checks(sf, seed: int | None = None, *, names=None, points: int | None = None,
               budget: int | None = None, tol: float | None = None) -> CheckReport:
    """Run the scenario's checks (or ``names``) and collect one report.

    Every check is isolated: an exception becomes an ``error`` record.  If the
    isometry check fails, checks that rely on it are recorded as skipped.
    """
    seed = sf.seed if seed is None else int(seed)
    ctx = RunContext(sf, seed, points or sf.points, budget or DEFAULT_BUDGET, tol)
    if names:
        unknown = [n for n in names if n not in CHECKS]
        if unknown:
            raise KeyError(f"unknown checks: {', '.join(unknown)}")
        file_tols = dict(sf.checks)
        plan = [(n, file_tols.get(n)) for n in names]
    else:
        plan = list(sf.checks) or [(n, None) for n in CHECKS]
    if any(spec.needs_isometry for n, _ in plan for spec in [CHECKS[n]]) and "isometry" not in [n for n, _ in plan]:
        plan = [("isometry", None)] + plan
    report = CheckReport(sf.name, seed)
    isometric = True
    for name, file_tol in plan:
        spec = CHECKS[name]
        t = tol if tol is not None else (file_tol if file_tol is not None else spec.tol)
        if spec.needs_isometry and not isometric:
            report.records.append(_rec(name, rule="none", verdict="skipped", message="isometry check failed"))
            continue
        try:
            recs = spec.fn(ctx, t)
        except Exception as err:  # crash isolation: record and move on
            recs = [_rec(name, rule="none", verdict="error", message=f"{type(err).__name__}: {err}")]
        report.records.extend(recs)
        if name == "isometry" and any(r.verdict != "pass" for r in recs):
            isometric = False
    return report
