"""The curvature inequality for doubly warped products and its equality cases.

    n2 Δ¹f1/f1 + n1 Δ²f2/f2  ≤  (n²/4)||H||² + n1 n2 max K̃

``max K̃`` is taken over 2-planes inside the immersed tangent space.  In a
space form it is replaced by ``c``.  Laplacians are the leaf Laplacians with the
positive-spectrum sign (see :mod:`dwarp.dwpimm`).
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import norm, qmc

from . import riemann as rg
from . import submanifold as sm
from .dwpimm import DwpImmersionScenario, DwpPoint, SpaceFormError

__all__ = [
    "HypothesisError",
    "InequalityReport",
    "inequality_201",
    "inequality_202",
    "max_ambient_sectional",
    "obstruction_probe",
]

SLACK_TOL = 1e-8
EQUALITY_TOL = 1e-9
HYPOTHESIS_TOL = 1e-6
ASCENT_STEPS = 20
MIN_BUDGET = 64


class HypothesisError(ValueError):
    """A scenario's claimed hypothesis (harmonic, eigenfunction, minimal) fails numerically."""

    def __init__(self, message: str, residuals: dict):
        self.residuals = residuals
        super().__init__(message)


# ---------------------------------------------------------------------------
# max sectional curvature over planes of T_pN
# ---------------------------------------------------------------------------


def _frame_curvature(pt: DwpPoint) -> np.ndarray:
    """``Rf[a, b, c, d] = <R̃(E_a, E_b)E_c, E_d>`` for the orthonormal pushed frame ``E``."""
    geo = pt.geo
    _, _, rm = rg.curvature_data(pt.s.ambient.product, geo.y)
    E = geo.E
    R = np.einsum("lijk,ai,bj,ck->abcl", rm, E, E, E)
    return np.einsum("abcl,lm,dm->abcd", R, geo.G, E)


def _plane_k(Rf: np.ndarray, u: np.ndarray, v: np.ndarray) -> float:
    # u, v orthonormal in frame coordinates
    return float(np.einsum("abcd,a,b,c,d->", Rf, u, v, v, u))


def _orthonormal_pair(a: np.ndarray, b: np.ndarray):
    na = np.linalg.norm(a)
    if na < 1e-12:
        return None
    u = a / na
    w = b - (b @ u) * u
    nw = np.linalg.norm(w)
    if nw < 1e-12:
        return None
    return u, w / nw


def _ascend(Rf: np.ndarray, u: np.ndarray, v: np.ndarray, steps: int = ASCENT_STEPS) -> float:
    """Coordinate ascent over small rotations of ``u`` and ``v`` toward the frame axes."""
    n = len(u)
    best = _plane_k(Rf, u, v)
    delta = 0.2
    for _ in range(steps):
        improved = False
        for k in range(n):
            for which in (0, 1):
                for sgn in (1.0, -1.0):
                    a, b = (u, v) if which == 0 else (v, u)
                    moved = np.cos(delta) * a + sgn * np.sin(delta) * np.eye(n)[k]
                    pair = _orthonormal_pair(moved, b) if which == 0 else _orthonormal_pair(b, moved)
                    if pair is None:
                        continue
                    val = _plane_k(Rf, *pair)
                    if val > best:
                        best, (u, v), improved = val, pair, True
        if not improved:
            delta *= 0.5
    return best


@dataclass
class _MaxEstimate:
    value: float
    mixed_planes: list = field(default_factory=list)


def _estimate_max(pt: DwpPoint, budget: int, seed: int) -> _MaxEstimate:
    Rf = _frame_curvature(pt)
    n = Rf.shape[0]
    eye = np.eye(n)
    n1 = pt.s.n1
    mixed = [_plane_k(Rf, eye[a], eye[b]) for a in range(n1) for b in range(n1, n)]
    best = max(_plane_k(Rf, eye[a], eye[b]) for a in range(n) for b in range(a + 1, n))
    if n == 2:
        return _MaxEstimate(best, mixed)
    best = max(best, _ascend(Rf, eye[0], eye[n1]))
    sampler = qmc.Halton(d=2 * n, scramble=True, seed=seed)
    draws = norm.ppf(np.clip(sampler.random(budget), 1e-12, 1 - 1e-12))
    record = -np.inf
    for row in draws:
        pair = _orthonormal_pair(row[:n], row[n:])
        if pair is None:
            continue
        val = _plane_k(Rf, *pair)
        best = max(best, val)
        if val > record:
            record = val
            best = max(best, _ascend(Rf, *pair))
    return _MaxEstimate(best, mixed)


def max_ambient_sectional(s: DwpImmersionScenario, p, budget: int = 256, seed: int = 0) -> float:
    """Largest ambient sectional curvature over 2-planes of ``dφ(T_pN)``.

    Exact ``c`` for a declared space form.  Otherwise the maximum over the frame
    planes and ``budget`` scrambled-Halton planes, with every running record
    refined by local ascent.  Halton prefixes are shared across budgets, so the
    estimate never decreases as the budget grows.
    """
    if budget < MIN_BUDGET:
        raise ValueError(f"budget must be at least {MIN_BUDGET}")
    if s.c is not None:
        return float(s.c)
    return _estimate_max(DwpPoint(s, p), budget, seed).value


# ---------------------------------------------------------------------------
# inequality reports
# ---------------------------------------------------------------------------


@dataclass
class InequalityReport:
    point: list
    lhs: float
    rhs: float
    gap: float
    holds: bool
    equality: bool
    max_curvature: float
    curvature_source: str
    mean_curvature_sq: float
    mixed_tg_residual: float
    balance_residual: float
    equality_conditions: bool
    mixed_planes_at_max: float | None = None

    def as_dict(self) -> dict:
        return asdict(self)


def _report(s: DwpImmersionScenario, pt: DwpPoint, kmax: float, source: str, mixed: list | None) -> InequalityReport:
    geo = pt.geo
    n1, n2, n = s.n1, s.n2, s.n
    lhs = n2 * pt.leaf_laplacian(1) / pt.f[1] + n1 * pt.leaf_laplacian(2) / pt.f[2]
    H = geo.mean_curvature()
    hsq = geo.ip(H, H)
    rhs = n * n / 4.0 * hsq + n1 * n2 * kmax
    gap = rhs - lhs
    scale = max(1.0, abs(lhs), abs(rhs))
    mixed_tg = max((geo.norm(pt.h(x, z)) for x in pt.frame1 for z in pt.frame2), default=0.0)
    balance = geo.norm(n1 * pt.partial_mean(1) - n2 * pt.partial_mean(2))
    cond = mixed_tg <= HYPOTHESIS_TOL and balance <= HYPOTHESIS_TOL
    spread = None if mixed is None else float(max(abs(k - kmax) for k in mixed)) if mixed else 0.0
    return InequalityReport(
        point=[float(x) for x in pt.p],
        lhs=float(lhs),
        rhs=float(rhs),
        gap=float(gap),
        holds=bool(lhs <= rhs + SLACK_TOL * scale),
        equality=bool(abs(gap) <= EQUALITY_TOL * scale),
        max_curvature=float(kmax),
        curvature_source=source,
        mean_curvature_sq=float(hsq),
        mixed_tg_residual=float(mixed_tg),
        balance_residual=float(balance),
        equality_conditions=bool(cond),
        mixed_planes_at_max=spread,
    )


def inequality_201(s: DwpImmersionScenario, p, budget: int = 256, seed: int = 0,
                   *, pt: DwpPoint | None = None) -> InequalityReport:
    """Both sides of the general inequality with a sampled (or exact space-form) ``max K̃``.

    ``mixed_planes_at_max`` is the largest ``|K̃(e_i, e_α) - max K̃|`` over the
    frame's mixed planes.  It is the sampled form of the second equality
    condition.
    """
    pt = pt or DwpPoint(s, p)
    if budget < MIN_BUDGET:
        raise ValueError(f"budget must be at least {MIN_BUDGET}")
    est = _estimate_max(pt, budget, seed)
    if s.c is not None:
        return _report(s, pt, float(s.c), "space_form", est.mixed_planes)
    return _report(s, pt, est.value, "sampled", est.mixed_planes)


def inequality_202(s: DwpImmersionScenario, p, *, pt: DwpPoint | None = None) -> InequalityReport:
    """The space-form inequality; requires a declared ``c``."""
    if s.c is None:
        raise SpaceFormError(f"scenario {s.name!r} declares no space-form constant c")
    pt = pt or DwpPoint(s, p)
    return _report(s, pt, float(s.c), "space_form", None)


# ---------------------------------------------------------------------------
# obstruction probes
# ---------------------------------------------------------------------------


def obstruction_probe(s: DwpImmersionScenario, points, *, tags=(), eigenvalues=None,
                      budget: int = 256, seed: int = 0, tol: float = HYPOTHESIS_TOL) -> dict:
    """Instance-level content of the non-existence results.

    Hypotheses are verified first: ``minimal`` (``||H|| ≤ tol``),
    ``harmonic`` (``Δ^i f_i = 0``) or ``eigenfunction`` with
    ``eigenvalues = (λ1, λ2)`` (``Δ^i f_i = λ_i f_i``).  A failure raises
    :class:`HypothesisError`.  For a minimal immersion the inequality then forces
    ``n2 λ1 + n1 λ2 ≤ n1 n2 max K̃`` at every point (so ``max K̃ ≥ 0`` in the
    harmonic case).  In a flat ambient with harmonic warps it also forces
    equality and mixed total geodesy.
    """
    tags = set(tags)
    if "harmonic" in tags:
        lam = (0.0, 0.0)
    elif "eigenfunction" in tags:
        if eigenvalues is None:
            raise HypothesisError("eigenfunction tag needs eigenvalues", {})
        lam = tuple(float(x) for x in eigenvalues)
    else:
        lam = None
    worst_h = worst_eig = 0.0
    margin = np.inf
    equality_ok = True
    rows = []
    for p in np.atleast_2d(points):
        pt = DwpPoint(s, p)
        H = pt.geo.mean_curvature()
        worst_h = max(worst_h, pt.geo.norm(H))
        if lam is not None:
            for i in (1, 2):
                worst_eig = max(worst_eig, abs(pt.leaf_laplacian(i) - lam[i - 1] * pt.f[i]))
        rep = inequality_201(s, p, budget, seed, pt=pt)
        rows.append(rep)
        if lam is not None:
            bound = s.n2 * lam[0] + s.n1 * lam[1]
            margin = min(margin, s.n1 * s.n2 * rep.max_curvature - bound)
    residuals = {"mean_curvature": worst_h, "eigen_equation": worst_eig}
    if "minimal" in tags and worst_h > tol:
        raise HypothesisError(f"scenario {s.name!r} is tagged minimal but ||H|| = {worst_h:.3e}", residuals)
    if lam is not None and worst_eig > tol:
        kind = "harmonic" if "harmonic" in tags else "eigenfunction"
        raise HypothesisError(
            f"scenario {s.name!r} is tagged {kind} but the eigen-equation residual is {worst_eig:.3e}", residuals
        )
    applicable = "minimal" in tags and lam is not None
    flat = s.c is not None and s.c == 0.0
    if applicable and flat and "harmonic" in tags:
        equality_ok = all(r.equality and r.mixed_tg_residual <= tol for r in rows)
    consistent = (not applicable) or (margin >= -SLACK_TOL and equality_ok)
    return {
        "applicable": applicable,
        "eigenvalues": list(lam) if lam is not None else None,
        "mean_curvature_residual": worst_h,
        "eigen_equation_residual": worst_eig,
        "curvature_margin": float(margin) if np.isfinite(margin) else None,
        "max_curvature_min": float(min(r.max_curvature for r in rows)) if rows else None,
        "flat_equality_path": bool(applicable and flat and "harmonic" in tags and equality_ok),
        "consistent": bool(consistent),
    }
