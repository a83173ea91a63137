"""Reader for ``.dwp`` scenario files.

The format is line oriented::

    # comment
    [manifold H]
    coords = t, z
    g t t = "1"            # indices by coordinate name or 1-based number
    g 2 2 = "1"
    bound t = (0.05, 5)     # numbers or simple expressions in pi
    bound z = (-pi, pi)

    [manifold N]
    coords = s
    induced = prof          # metric pulled back through an immersion
    bound s = (-1, 1)

    [warp amb]
    factors = H, C
    f1 = "t"                # function on the first factor
    f2 = "1"

    [immersion prof]
    source = N
    target = H
    map t = "sqrt(1 + s^2)" # one entry per target coordinate
    map z = "log(s + sqrt(1 + s^2))"

    [immersion circ]
    source = C
    target = C
    identity = true

    [scenario catenoid]
    phi1 = prof
    phi2 = circ
    ambient = amb
    c = 0
    tags = minimal, harmonic
    eigenvalues = (0, 0)
    seed = 7
    points = 12
    expect minimal = true

    [checks]
    isometry
    mixed_totally_geodesic = 1e-8

Unset metric entries are zero; ``g i j`` also sets ``g j i`` unless that entry
is given separately, in which case symmetry is checked at sample points.
"""
from __future__ import annotations

import math
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .. import dwp as dwpmod
from .. import dwpimm as di
from .. import exprs as ex
from .. import riemann as rg
from .. import submanifold as sm

__all__ = ["ScenarioFile", "ScenarioFileError", "load_scenario", "parse_scenario_text"]

DEFAULT_POINTS = 12
DEFAULT_SEED = 0


class ScenarioFileError(ValueError):
    def __init__(self, message: str, section: str | None = None, line: int | None = None, path: str | None = None):
        self.raw, self.section, self.line, self.path = message, section, line, path
        where = []
        if path:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        if section:
            where.append(f"[{section}]")
        prefix = ": ".join([", ".join(where)]) + ": " if where else ""
        super().__init__(prefix + message)


@dataclass
class _Entry:
    key: tuple[str, ...]
    value: str
    quoted: bool
    line: int


@dataclass
class _Section:
    kind: str
    name: str
    line: int
    entries: list[_Entry] = field(default_factory=list)

    @property
    def label(self) -> str:
        return f"{self.kind} {self.name}".strip()

    def get(self, *key: str) -> _Entry | None:
        found = [e for e in self.entries if e.key == key]
        if len(found) > 1:
            raise ScenarioFileError(f"duplicate entry {' '.join(key)!r}", self.label, found[1].line)
        return found[0] if found else None

    def require(self, *key: str) -> _Entry:
        e = self.get(*key)
        if e is None:
            raise ScenarioFileError(f"missing entry {' '.join(key)!r}", self.label, self.line)
        return e


@dataclass
class ScenarioFile:
    name: str
    scenario: di.DwpImmersionScenario
    checks: list[tuple[str, float | None]]
    seed: int
    points: int
    tags: tuple[str, ...]
    eigenvalues: tuple[float, float] | None
    expectations: dict
    path: str | None = None


_HEADER = re.compile(r"^\[\s*([A-Za-z_]+)(?:\s+([A-Za-z_][A-Za-z_0-9]*))?\s*\]$")
_KINDS = ("manifold", "warp", "immersion", "scenario", "checks")


def _strip_comment(line: str) -> str:
    out, quoted = [], False
    for ch in line:
        if ch == '"':
            quoted = not quoted
        elif ch == "#" and not quoted:
            break
        out.append(ch)
    return "".join(out).strip()


def _tokenize(text: str, path=None) -> list[_Section]:
    sections: list[_Section] = []
    current: _Section | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw)
        if not line:
            continue
        m = _HEADER.match(line)
        if m:
            kind, name = m.group(1), m.group(2) or ""
            if kind not in _KINDS:
                raise ScenarioFileError(f"unknown section kind {kind!r}", None, lineno, path)
            if kind != "checks" and not name:
                raise ScenarioFileError(f"section [{kind}] needs a name", None, lineno, path)
            current = _Section(kind, name, lineno)
            sections.append(current)
            continue
        if current is None:
            raise ScenarioFileError("entry outside of any section", None, lineno, path)
        if "=" in line:
            lhs, rhs = line.split("=", 1)
        else:
            lhs, rhs = line, ""
        key = tuple(lhs.split())
        if not key:
            raise ScenarioFileError("entry without a key", current.label, lineno, path)
        rhs = rhs.strip()
        quoted = len(rhs) >= 2 and rhs[0] == '"' and rhs[-1] == '"'
        if quoted:
            rhs = rhs[1:-1]
        elif '"' in rhs:
            raise ScenarioFileError("unbalanced quote", current.label, lineno, path)
        current.entries.append(_Entry(key, rhs, quoted, lineno))
    return sections


def _number(text: str, section: str, line: int) -> float:
    try:
        e = ex.parse(text)
    except ex.ParseError as err:
        raise ScenarioFileError(f"bad number {text!r}: {err}", section, line) from None
    stray = ex.free_vars(e) - {"pi"}
    if stray:
        raise ScenarioFileError(f"bad number {text!r}: unknown names {sorted(stray)}", section, line)
    try:
        return ex.evaluate(e, {"pi": math.pi})
    except ex.ExprError as err:
        raise ScenarioFileError(f"bad number {text!r}: {err}", section, line) from None


def _pair(text: str, section: str, line: int) -> tuple[float, float]:
    t = text.strip()
    if not (t.startswith("(") and t.endswith(")")):
        raise ScenarioFileError(f"expected '(a, b)', got {text!r}", section, line)
    parts = [x.strip() for x in t[1:-1].split(",")]
    if len(parts) != 2:
        raise ScenarioFileError(f"expected two values, got {text!r}", section, line)
    return _number(parts[0], section, line), _number(parts[1], section, line)


def _names(text: str) -> list[str]:
    return [x.strip() for x in text.split(",") if x.strip()]


def _expr(entry: _Entry, variables, section: str) -> ex.Expr:
    if not entry.quoted:
        raise ScenarioFileError("expression values must be quoted", section, entry.line)
    try:
        return ex.parse(entry.value, variables)
    except ex.ParseError as err:
        raise ScenarioFileError(f"in {entry.value!r}: {err}", section, entry.line) from None


def _bool(text: str, section: str, line: int) -> bool:
    t = text.strip().lower()
    if t in ("true", "yes", "1"):
        return True
    if t in ("false", "no", "0"):
        return False
    raise ScenarioFileError(f"expected true/false, got {text!r}", section, line)


class _Loader:
    def __init__(self, sections: list[_Section], path=None):
        self.path = path
        self.by_kind: dict[str, dict[str, _Section]] = {k: {} for k in _KINDS}
        self.checks_sections = []
        for sec in sections:
            if sec.kind == "checks":
                self.checks_sections.append(sec)
                continue
            table = self.by_kind[sec.kind]
            if sec.name in table:
                raise ScenarioFileError(f"duplicate {sec.kind} {sec.name!r}", sec.label, sec.line, path)
            table[sec.name] = sec
        self.manifolds: dict[str, rg.ChartedManifold] = {}
        self.immersions: dict[str, sm.ImmersionSpec] = {}
        self.warps: dict[str, dwpmod.DoublyWarpedProduct] = {}
        self._building: set[str] = set()

    def _err(self, msg, sec: _Section | None = None, line=None):
        return ScenarioFileError(msg, sec.label if sec else None, line if line is not None else (sec.line if sec else None), self.path)

    def lookup(self, kind: str, name: str, sec: _Section, line: int) -> _Section:
        table = self.by_kind[kind]
        if name not in table:
            raise self._err(f"unknown {kind} {name!r}", sec, line)
        return table[name]

    # manifolds --------------------------------------------------------------
    def manifold(self, name: str, ref: _Section, line: int) -> rg.ChartedManifold:
        if name in self.manifolds:
            return self.manifolds[name]
        sec = self.lookup("manifold", name, ref, line)
        if name in self._building:
            raise self._err(f"circular definition involving manifold {name!r}", sec)
        self._building.add(name)
        coords = tuple(_names(sec.require("coords").value))
        if not coords:
            raise self._err("coords must list at least one name", sec)
        if len(set(coords)) != len(coords):
            raise self._err("duplicate coordinate names", sec)
        n = len(coords)
        bounds = []
        for c in coords:
            e = sec.get("bound", c)
            if e is None:
                raise self._err(f"missing bound for coordinate {c!r}", sec)
            bounds.append(_pair(e.value, sec.label, e.line))
        for e in sec.entries:
            if e.key[0] == "bound" and (len(e.key) != 2 or e.key[1] not in coords):
                raise self._err(f"bound for undeclared coordinate {' '.join(e.key[1:])!r}", sec, e.line)
        induced = sec.get("induced")
        if induced is not None:
            if any(e.key[0] == "g" for e in sec.entries):
                raise self._err("a manifold is either induced or has explicit g entries", sec, induced.line)
            metric = self._induced_metric(induced.value.strip(), name, coords, sec, induced.line)
        else:
            metric = self._explicit_metric(sec, coords)
        for e in sec.entries:
            if e.key[0] not in ("coords", "bound", "g", "induced"):
                raise self._err(f"unknown manifold entry {' '.join(e.key)!r}", sec, e.line)
        try:
            M = rg.ChartedManifold(coords, metric, tuple(bounds), name)
        except ValueError as err:
            raise self._err(str(err), sec) from None
        self.manifolds[name] = M
        self._building.discard(name)
        return M

    def _index(self, tok: str, coords, sec, line) -> int:
        if tok in coords:
            return coords.index(tok)
        if tok.isdigit() and 1 <= int(tok) <= len(coords):
            return int(tok) - 1
        raise self._err(f"metric index {tok!r} is not a coordinate of this manifold", sec, line)

    def _explicit_metric(self, sec: _Section, coords):
        n = len(coords)
        given: dict[tuple[int, int], ex.Expr] = {}
        for e in sec.entries:
            if e.key[0] != "g":
                continue
            if len(e.key) != 3:
                raise self._err("metric entries look like 'g i j = \"expr\"'", sec, e.line)
            i, j = self._index(e.key[1], coords, sec, e.line), self._index(e.key[2], coords, sec, e.line)
            if (i, j) in given:
                raise self._err(f"metric entry ({e.key[1]}, {e.key[2]}) given twice", sec, e.line)
            given[(i, j)] = _expr(e, coords, sec.label)
        if not given:
            raise self._err("no metric entries", sec)
        rows = []
        for i in range(n):
            row = []
            for j in range(n):
                v = given.get((i, j), given.get((j, i), ex.ZERO))
                row.append(v)
            rows.append(tuple(row))
        return tuple(rows)

    def _induced_metric(self, imm_name, manifold_name, coords, sec, line):
        isec = self.lookup("immersion", imm_name, sec, line)
        src = isec.require("source").value.strip()
        if src != manifold_name:
            raise self._err(f"immersion {imm_name!r} does not start at {manifold_name!r}", sec, line)
        tgt_name = isec.require("target").value.strip()
        T = self.manifold(tgt_name, isec, isec.require("target").line)
        comps = self._map_components(isec, coords, T)
        sub = dict(zip(T.coords, comps))
        G = [[ex.substitute(e, sub) for e in row] for row in T.metric]
        J = [[ex.diff(c, x) for x in coords] for c in comps]
        m, n = T.dim, len(coords)
        rows = []
        for a in range(n):
            row = []
            for b in range(n):
                s = ex.ZERO
                for C in range(m):
                    for D in range(m):
                        s = s + J[C][a] * G[C][D] * J[D][b]
                row.append(s)
            rows.append(tuple(row))
        return tuple(rows)

    # immersions -------------------------------------------------------------
    def _map_components(self, sec: _Section, source_coords, T: rg.ChartedManifold):
        ident = sec.get("identity")
        if ident is not None and _bool(ident.value, sec.label, ident.line):
            if tuple(source_coords) != T.coords and len(source_coords) != T.dim:
                raise self._err("identity immersion needs matching dimensions", sec, ident.line)
            return [ex.var(c) for c in source_coords]
        comps = []
        for c in T.coords:
            e = sec.get("map", c)
            if e is None:
                raise self._err(f"missing 'map {c}' for target coordinate {c!r}", sec)
            comps.append(_expr(e, source_coords, sec.label))
        for e in sec.entries:
            if e.key[0] == "map" and (len(e.key) != 2 or e.key[1] not in T.coords):
                raise self._err(f"map for unknown target coordinate {' '.join(e.key[1:])!r}", sec, e.line)
        return comps

    def immersion(self, name: str, ref: _Section, line: int) -> sm.ImmersionSpec:
        if name in self.immersions:
            return self.immersions[name]
        sec = self.lookup("immersion", name, ref, line)
        for e in sec.entries:
            if e.key[0] not in ("source", "target", "map", "identity"):
                raise self._err(f"unknown immersion entry {' '.join(e.key)!r}", sec, e.line)
        S = self.manifold(sec.require("source").value.strip(), sec, sec.require("source").line)
        T = self.manifold(sec.require("target").value.strip(), sec, sec.require("target").line)
        if S.dim > T.dim:
            raise self._err(f"source dimension {S.dim} exceeds target dimension {T.dim}", sec)
        comps = self._map_components(sec, S.coords, T)
        try:
            phi = sm.ImmersionSpec(S, T, tuple(comps), name)
        except ValueError as err:
            raise self._err(str(err), sec) from None
        self.immersions[name] = phi
        return phi

    # warps ------------------------------------------------------------------
    def warp(self, name: str, ref: _Section, line: int) -> dwpmod.DoublyWarpedProduct:
        if name in self.warps:
            return self.warps[name]
        sec = self.lookup("warp", name, ref, line)
        for e in sec.entries:
            if e.key[0] not in ("factors", "f1", "f2"):
                raise self._err(f"unknown warp entry {' '.join(e.key)!r}", sec, e.line)
        fac = sec.require("factors")
        names = _names(fac.value)
        if len(names) != 2:
            raise self._err("factors must name exactly two manifolds", sec, fac.line)
        M1 = self.manifold(names[0], sec, fac.line)
        M2 = self.manifold(names[1], sec, fac.line)
        f1 = _expr(sec.require("f1"), M1.coords, sec.label)
        f2 = _expr(sec.require("f2"), M2.coords, sec.label)
        try:
            W = dwpmod.DoublyWarpedProduct(M1, M2, f1, f2, name)
        except ValueError as err:
            raise self._err(str(err), sec) from None
        self.warps[name] = W
        return W


_EXPECT_BOOL = {"totally_geodesic", "totally_umbilical", "minimal", "equality_201", "equality_202",
                "mixed_totally_geodesic"}
_EXPECT_NUM = {"mean_curvature_norm"}


def parse_scenario_text(text: str, path: str | None = None, *, validate: bool = True) -> ScenarioFile:
    try:
        return _parse(text, path, validate)
    except ScenarioFileError as err:
        if err.path is None and path is not None:
            raise ScenarioFileError(err.raw, err.section, err.line, path) from None
        raise


def _parse(text: str, path, validate: bool) -> ScenarioFile:
    sections = _tokenize(text, path)
    L = _Loader(sections, path)
    # every declared object must resolve, even if unused
    for kind, fn in (("manifold", L.manifold), ("immersion", L.immersion), ("warp", L.warp)):
        for name, s in L.by_kind[kind].items():
            fn(name, s, s.line)
    scen = L.by_kind["scenario"]
    if len(scen) != 1:
        raise ScenarioFileError(f"expected exactly one [scenario] section, found {len(scen)}", None, None, path)
    (sec,) = scen.values()
    known = {"phi1", "phi2", "ambient", "c", "tags", "eigenvalues", "seed", "points", "expect"}
    for e in sec.entries:
        if e.key[0] not in known:
            raise L._err(f"unknown scenario entry {' '.join(e.key)!r}", sec, e.line)
    phi1 = L.immersion(sec.require("phi1").value.strip(), sec, sec.require("phi1").line)
    phi2 = L.immersion(sec.require("phi2").value.strip(), sec, sec.require("phi2").line)
    amb = L.warp(sec.require("ambient").value.strip(), sec, sec.require("ambient").line)
    if phi1.target != amb.factor1:
        raise L._err(f"phi1 targets {phi1.target.name!r} but the ambient's first factor is {amb.factor1.name!r}", sec)
    if phi2.target != amb.factor2:
        raise L._err(f"phi2 targets {phi2.target.name!r} but the ambient's second factor is {amb.factor2.name!r}", sec)
    c_entry = sec.get("c")
    c = _number(c_entry.value, sec.label, c_entry.line) if c_entry else None
    seed_e, pts_e = sec.get("seed"), sec.get("points")
    seed = int(_number(seed_e.value, sec.label, seed_e.line)) if seed_e else DEFAULT_SEED
    points = int(_number(pts_e.value, sec.label, pts_e.line)) if pts_e else DEFAULT_POINTS
    if points < 1:
        raise L._err("points must be positive", sec, pts_e.line)
    tags_e = sec.get("tags")
    tags = tuple(_names(tags_e.value)) if tags_e else ()
    eig_e = sec.get("eigenvalues")
    eig = _pair(eig_e.value, sec.label, eig_e.line) if eig_e else None
    expectations = {}
    for e in sec.entries:
        if e.key[0] != "expect":
            continue
        if len(e.key) != 2:
            raise L._err("expectations look like 'expect <flag> = value'", sec, e.line)
        flag = e.key[1]
        if flag in _EXPECT_BOOL:
            expectations[flag] = _bool(e.value, sec.label, e.line)
        elif flag in _EXPECT_NUM:
            expectations[flag] = _number(e.value, sec.label, e.line)
        else:
            raise L._err(f"unknown expectation {flag!r}", sec, e.line)
    try:
        scenario = di.DwpImmersionScenario(phi1, phi2, amb, c, sec.name)
    except ValueError as err:
        raise L._err(str(err), sec) from None
    from .checks import CHECKS  # late import: checks depends on this module's types

    checks: list[tuple[str, float | None]] = []
    for csec in L.checks_sections:
        for e in csec.entries:
            if len(e.key) != 1 or e.key[0] not in CHECKS:
                raise L._err(f"unknown check {' '.join(e.key)!r}", csec, e.line)
            tol = _number(e.value, csec.label, e.line) if e.value else None
            checks.append((e.key[0], tol))
    sf = ScenarioFile(sec.name, scenario, checks, seed, points, tags, eig, expectations, path)
    if validate:
        validate_scenario_file(sf, L)
    return sf


def validate_scenario_file(sf: ScenarioFile, L: _Loader | None = None) -> None:
    """Metric symmetry/positivity and warp positivity at seeded sample points."""
    rng = np.random.default_rng(sf.seed)
    manifolds = list(L.manifolds.values()) if L else [
        sf.scenario.phi1.source, sf.scenario.phi2.source, sf.scenario.ambient.factor1, sf.scenario.ambient.factor2,
    ]
    for M in manifolds:
        for p in rg.sample_points(M, max(sf.points, 8), rng):
            g = M.metric_jet(p)
            if not np.allclose(g, g.T, rtol=1e-12, atol=1e-12):
                raise ScenarioFileError(f"metric of {M.name!r} is not symmetric at {tuple(p)}", f"manifold {M.name}", None, sf.path)
            try:
                rg._check_pd(g, f" at {tuple(float(x) for x in p)}")
            except rg.MetricError as err:
                raise ScenarioFileError(f"manifold {M.name!r}: {err}", f"manifold {M.name}", None, sf.path) from None
    s = sf.scenario
    amb = s.ambient
    try:
        amb.check_positive(rg.sample_points(amb.factor1, 16, rng), rg.sample_points(amb.factor2, 16, rng))
        pts = s.sample(sf.points, sf.seed)
        s.source.check_positive(pts[:, : s.n1], pts[:, s.n1 :])
    except dwpmod.WarpError as err:
        raise ScenarioFileError(f"positivity violation: {err}", f"scenario {sf.name}", None, sf.path) from None
    except ex.DomainError as err:
        raise ScenarioFileError(f"domain violation: {err}", f"scenario {sf.name}", None, sf.path) from None


def load_scenario(path, *, validate: bool = True) -> ScenarioFile:
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as err:
        raise ScenarioFileError(f"cannot read scenario file: {err.strerror}", None, None, str(path)) from None
    return parse_scenario_text(text, str(path), validate=validate)
