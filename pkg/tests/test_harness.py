import dataclasses
import json

import pytest

from dwarp import exprs as ex
from dwarp.harness import (CHECKS, CheckRecord, CheckReport, ScenarioFileError, bundled_path, bundled_scenarios,
                           load_scenario, parse_scenario_text, recompute_verdict, resolve_scenario, run_checks)
from dwarp.harness import checks as checks_mod
from conftest import bundled

REQUIRED = {"direct_product", "polar_plane", "sphere_warped", "flat_doubly_warped", "surface_of_revolution_catenoid",
            "cylinder_of_revolution", "generic_4d_doubly_warped", "eigenfunction_case", "harmonic_case"}

# every anchored operation of the geometry modules and the check that exercises it
COVERAGE = {
    "dwp.build_dwp": "warp_positivity",
    "dwp.u_field": "u_field",
    "dwp.dwp_connection_closed_form": "connection_closed_form",
    "dwp.dwp_curvature_closed_form": "curvature_closed_form",
    "dwp.wedge": "wedge",
    "dwp.mixed_sectional_closed_form": "mixed_sectional",
    "submanifold.pushforward": "isometry",
    "submanifold.isometry_residual": "isometry",
    "submanifold.second_fundamental_form": "second_fundamental_form",
    "submanifold.shape_operator": "weingarten",
    "submanifold.normal_connection": "weingarten",
    "submanifold.mean_curvature": "mean_curvature",
    "submanifold.gauss_equation_residual": "gauss_equation",
    "submanifold.classify": "classification",
    "dwpimm.compose_scenario": "space_form",
    "dwpimm.partial_mean_curvature": "partial_mean_curvature",
    "dwpimm.h_decomposition_check": "h_decomposition",
    "dwpimm.norm_identity_check": "norm_identity",
    "dwpimm.ni_geodesy_check": "ni_totally_geodesic",
    "dwpimm.umbilical_check": "umbilical",
    "dwpimm.minimality_check": "minimality",
    "dwpimm.shape_operator_closed_form": "shape_operator_closed_form",
    "dwpimm.h1_dot_h2_check": "h1_dot_h2",
    "dwpimm.a_h_closed_form_check": "a_h_closed_form",
    "chenineq.max_ambient_sectional": "max_sectional",
    "chenineq.inequality_201": "inequality_201",
    "chenineq.inequality_202": "inequality_202",
    "chenineq.obstruction_probe": "obstruction",
}

BASE = """
[manifold R]
coords = r
g r r = "1"
bound r = (0.5, 2)

[manifold S]
coords = s
g 1 1 = "1"
bound s = (0.5, 2)

[warp w]
factors = R, S
f1 = "r"
f2 = "s"

[immersion i1]
source = R
target = R
identity = true

[immersion i2]
source = S
target = S
identity = true

[scenario flat]
phi1 = i1
phi2 = i2
ambient = w
c = 0
points = 4

[checks]
isometry
h1_dot_h2 = 1e-7
inequality_202
"""


# -- bundled library -----------------------------------------------------------------------

def test_bundled_library():
    names = bundled_scenarios()
    assert len(names) >= 9
    assert REQUIRED <= set(names)
    for name in names:
        sf = load_scenario(bundled_path(name))
        assert sf.name and sf.checks


def test_coverage_matrix():
    used = set()
    for name in bundled_scenarios():
        used |= {c for c, _ in bundled(name).checks}
    assert set(COVERAGE.values()) <= used
    assert set(COVERAGE.values()) <= set(CHECKS)


def test_bundled_name_errors():
    with pytest.raises(ScenarioFileError, match="available"):
        bundled_path("nope")
    with pytest.raises(ScenarioFileError, match="no such file"):
        resolve_scenario("missing/thing.dwp")
    assert resolve_scenario("polar_plane") == bundled_path("polar_plane")


# -- parsing -----------------------------------------------------------------------------

def test_parse_inline_scenario():
    sf = parse_scenario_text(BASE)
    assert sf.name == "flat" and sf.points == 4 and sf.seed == 0
    assert sf.checks == [("isometry", None), ("h1_dot_h2", 1e-7), ("inequality_202", None)]
    assert sf.scenario.c == 0.0
    assert ex.to_str(sf.scenario.f1) == "r"


def diagnostics(text):
    with pytest.raises(ScenarioFileError) as err:
        parse_scenario_text(text, "bad.dwp")
    return err.value


def test_unknown_manifold_reference():
    err = diagnostics(BASE.replace("factors = R, S", "factors = R, Q"))
    assert "Q" in str(err) and err.section == "warp w" and err.line == 13 and err.path == "bad.dwp"


def test_expression_errors_carry_location():
    err = diagnostics(BASE.replace('f1 = "r"', 'f1 = "r +"'))
    assert err.section == "warp w" and err.line == 14
    err = diagnostics(BASE.replace('f2 = "s"', 'f2 = "s*r"'))
    assert "r" in str(err) and err.section == "warp w"


def test_positivity_violation():
    err = diagnostics(BASE.replace('f1 = "r"', 'f1 = "r - 1"'))
    assert "positivity violation" in str(err) and "f1" in str(err)


def test_structure_errors():
    assert "unknown check" in str(diagnostics(BASE + "frobnicate\n"))
    assert "unknown scenario entry" in str(diagnostics(BASE.replace("points = 4", "pointz = 4")))
    assert "exactly one" in str(diagnostics(BASE.replace("[scenario flat]", "[scenario flat]\n").replace(
        "[scenario flat]", "[scenario a]\nphi1 = i1\n\n[scenario flat]", 1)))
    assert "duplicate" in str(diagnostics(BASE.replace('f1 = "r"', 'f1 = "r"\nf1 = "r"')))
    err = diagnostics(BASE.replace("[manifold R]", "[manifold R]\ncolor = blue"))
    assert err.section == "manifold R"


def test_dimension_mismatch():
    text = BASE.replace("g r r = \"1\"", "g r r = \"1\"\ng 1 2 = \"0\"")
    with pytest.raises(ScenarioFileError):
        parse_scenario_text(text)


def test_metric_must_be_positive_definite():
    err = diagnostics(BASE.replace('g r r = "1"', 'g r r = "r - 1"'))
    assert "R" in str(err)


def test_load_reports_missing_file(tmp_path):
    with pytest.raises(ScenarioFileError, match="cannot read"):
        load_scenario(tmp_path / "none.dwp")


# -- running --------------------------------------------------------------------------------

def test_catenoid_full_suite_passes():
    rep = run_checks(bundled("surface_of_revolution_catenoid"), points=4, budget=64)
    assert rep.ok and rep.summary["fail"] == 0 and rep.summary["indeterminate"] == 0
    assert {c for c, _ in bundled("surface_of_revolution_catenoid").checks} <= {r.name for r in rep.records}
    mins = [r for r in rep.records if r.name == "minimality" and "mean_curvature_norm" in r.values]
    assert mins and mins[0].values["mean_curvature_norm"] <= 1e-6


def test_identity_scenario_sets_equality_flags():
    rep = run_checks(parse_scenario_text(BASE))
    flags = {r.values.get("property"): r for r in rep.records if r.name == "inequality_202"}
    assert flags["equality implies mixed total geodesy and n1 H1 = n2 H2"].values["equality_points"] == 4
    assert all(r.verdict == "pass" for r in flags.values())
    assert rep.ok


def test_file_tolerance_used_and_overridable():
    sf = parse_scenario_text(BASE)
    rec = [r for r in run_checks(sf).records if r.name == "h1_dot_h2"][0]
    assert rec.tolerance == 1e-7
    rec = [r for r in run_checks(sf, tol=1e-3).records if r.name == "h1_dot_h2"][0]
    assert rec.tolerance == 1e-3


def test_broken_isometry_skips_dependents():
    text = BASE.replace("identity = true", 'map r = "2*r"', 1).replace("bound r = (0.5, 2)", "bound r = (0.5, 4)")
    rep = run_checks(parse_scenario_text(text), names=["isometry", "h1_dot_h2", "wedge"])
    assert "fail" in rep.verdicts("isometry")
    assert rep.verdicts("h1_dot_h2") == ["skipped"]
    assert "skipped" not in rep.verdicts("wedge")
    assert rep.exit_code() == 1


def test_crash_isolation(monkeypatch):
    def boom(ctx, tol):
        raise ex.DomainError(ex.parse("log(x)"), {"x": -1.0})

    monkeypatch.setitem(CHECKS, "wedge", dataclasses.replace(CHECKS["wedge"], fn=boom))
    rep = run_checks(parse_scenario_text(BASE), names=["wedge", "h1_dot_h2"])
    assert rep.verdicts("wedge") == ["error"]
    assert "DomainError" in [r for r in rep.records if r.name == "wedge"][0].message
    assert rep.verdicts("h1_dot_h2") and set(rep.verdicts("h1_dot_h2")) == {"pass"}
    assert rep.exit_code() == 1


def test_unknown_check_name():
    with pytest.raises(KeyError):
        run_checks(parse_scenario_text(BASE), names=["nope"])


def test_c_dependent_checks_skip_without_c():
    sf = parse_scenario_text(BASE.replace("c = 0\n", ""))
    rep = run_checks(sf)
    assert set(rep.verdicts("h1_dot_h2")) <= {"skipped", "info"}


# -- reports ---------------------------------------------------------------------------------

def test_determinism_byte_identical():
    sf = bundled("generic_4d_doubly_warped")
    a = run_checks(sf, 7, points=3, budget=64).to_json()
    b = run_checks(load_scenario(bundled_path("generic_4d_doubly_warped")), 7, points=3, budget=64).to_json()
    assert a == b
    assert a != run_checks(sf, 8, points=3, budget=64).to_json()


def test_json_round_trip():
    rep = run_checks(bundled("polar_plane"), points=3, budget=64)
    text = rep.to_json()
    again = CheckReport.from_json(text)
    assert again.to_json() == text
    d = json.loads(text)
    assert list(d) == ["engine", "version", "scenario", "seed", "summary", "records"]
    assert list(d["records"][0]) == ["name", "anchor", "point", "values", "residual", "tolerance", "rule",
                                     "verdict", "message"]


def test_tampered_report_rejected():
    d = json.loads(run_checks(bundled("polar_plane"), points=3, budget=64).to_json())
    d["summary"]["pass"] += 1
    with pytest.raises(ValueError, match="summary"):
        CheckReport.from_json(json.dumps(d))


def test_verdicts_recomputed_from_values():
    r = CheckRecord("x", "a", None, {}, 5e-6, 1e-6, "band", verdict="pass")
    assert r.verdict == "indeterminate"
    assert CheckRecord("x", "a", None, {}, 2e-5, 1e-6, "band").verdict == "fail"
    assert CheckRecord("x", "a", None, {}, 2e-6, 1e-6, "bound").verdict == "fail"
    assert CheckRecord("x", "a", None, {"ok": True}, None, None, "flag").verdict == "pass"
    assert CheckRecord("x", "a", None, {"ok": None}, None, None, "flag").verdict == "indeterminate"
    assert CheckRecord("x", "a", None, {}, None, None, "none", verdict="info").verdict == "info"
    assert recompute_verdict("band", float("nan"), 1e-6, {}, "") == "error"
    with pytest.raises(ValueError):
        CheckRecord("x", "a", None, {}, None, None, "none", verdict="great")


def test_every_record_verdict_is_recomputable():
    rep = run_checks(bundled("surface_of_revolution_catenoid"), points=3, budget=64)
    for r in rep.records:
        assert recompute_verdict(r.rule, r.residual, r.tolerance, r.values, r.verdict) == r.verdict
        assert r.anchor


def test_text_report():
    rep = run_checks(parse_scenario_text(BASE))
    text = rep.to_text()
    assert text.startswith("scenario flat  seed 0")
    assert "PASS" in text and text.rstrip().splitlines()[-1].startswith("summary: pass")


@pytest.mark.parametrize("name", sorted(REQUIRED))
def test_bundled_scenarios_are_clean(name):
    rep = run_checks(bundled(name), points=4, budget=64)
    bad = [(r.name, r.verdict, r.message) for r in rep.records if r.verdict in ("fail", "error", "indeterminate")]
    assert not bad


def test_check_registry_shape():
    for name, spec in CHECKS.items():
        assert callable(spec.fn) and spec.anchor and spec.tol >= 0
    assert checks_mod.DEFAULT_BUDGET >= 64
