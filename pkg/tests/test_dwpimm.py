import numpy as np
import pytest

from dwarp import dwp, dwpimm as di, exprs as ex, riemann as rg, submanifold as sm
from conftest import (B, bundled, catenoid, cylinder, generic4, identity_flat, identity_scenario,
                      r3_cylindrical, revolution, round_sphere, s3, generic3_ambient)
import oracles


def pts(s, count=6, seed=3):
    return s.sample(count, seed)


def norm(s, p, v):
    y = s.immersion.map(p)
    G = rg.metric_at(s.ambient.product, y)
    return float(np.sqrt(v @ G @ v))


# -- scenario construction ---------------------------------------------------------------

def test_identity_factors_give_rho_and_zero_h():
    s = identity_flat()
    for p in pts(s):
        env = dict(zip(s.source.coords, p))
        assert ex.evaluate(s.f1, env) == pytest.approx(p[0])
        assert ex.evaluate(s.f2, env) == pytest.approx(p[1])
        pt = di.DwpPoint(s, p)
        assert not np.any(np.abs(pt.geo.h_frame) > 1e-12)


def test_warps_are_composed(rng):
    s = catenoid()
    for p in pts(s):
        y = s.immersion.map(p)
        assert ex.evaluate(s.f1, dict(zip(s.source.coords, p))) == pytest.approx(y[0], rel=1e-14)
    g4 = generic4()
    for p in pts(g4):
        y = g4.immersion.map(p)
        env = dict(zip(g4.ambient.coords, y))
        for i in (1, 2):
            val = ex.evaluate(g4.f(i), dict(zip(g4.source.coords, p)))
            assert val == pytest.approx(ex.evaluate(g4.rho(i), env), rel=1e-13)


def test_product_map_is_isometric():
    for s in (catenoid(), generic4(), s3(), round_sphere()):
        for p in pts(s):
            assert sm.isometry_residual(s.immersion, p) <= 1e-8


def test_compose_rejects_non_isometric_factor():
    H, C, amb = r3_cylindrical()
    P = B(["s"], ["1"], [(0.5, 1.5)], "P")
    bad = sm.ImmersionSpec.build(P, H, ["s", "s"])
    with pytest.raises(sm.ImmersionError, match="not isometric"):
        di.compose_scenario(bad, sm.ImmersionSpec.identity(C), amb)


def test_compose_checks_declared_curvature():
    with pytest.raises(di.ScenarioError, match="constant curvature"):
        revolution(["sqrt(1+s^2)", "log(s+sqrt(1+s^2))"], (-1, 1), c=1.0)


def test_space_form_constant_required():
    with pytest.raises(di.SpaceFormError):
        di.h1_dot_h2_check(generic4(), pts(generic4())[0])


# -- partial mean curvature and the h decomposition ---------------------------------------------

def test_partial_mean_curvature_against_oracle():
    for s in (catenoid(), generic4(), s3()):
        for p in pts(s, 3):
            pt = di.DwpPoint(s, p)
            for i in (1, 2):
                want = sum(oracles.fd_second_fundamental_form(s.immersion, p, e, e)[0] for e in pt.frame(i))
                want /= len(pt.frame(i))
                assert norm(s, p, di.partial_mean_curvature(s, i, p) - want) <= 1e-6


def test_partial_mean_examples():
    s = identity_flat()
    assert np.max(np.abs(di.partial_mean_curvature(s, 1, pts(s)[0]))) <= 1e-12
    for s in (catenoid(), cylinder()):
        for p in pts(s):
            pt = di.DwpPoint(s, p)
            # the circle factor is an identity map, so H2 = -D ln ρ1
            assert norm(s, p, pt.partial_mean(2) + pt.Dlog[1]) <= 1e-10
    # a totally geodesic factor with ρ2 = 1: straight line in the half-plane
    line = revolution(["s", "0.3"], (0.5, 2.0))
    for p in pts(line):
        assert norm(line, p, di.partial_mean_curvature(line, 1, p)) <= 1e-12


def test_h_decomposition():
    for s in (identity_flat(), catenoid(), round_sphere(), generic4(), s3()):
        for p in pts(s, 4):
            r = di.h_decomposition_check(s, p)
            assert r["mixed"] <= 1e-8
            assert r["block1"] <= 1e-6 and r["block2"] <= 1e-6


def test_h_matches_difference_oracle():
    s = generic4()
    for p in pts(s, 3):
        pt = di.DwpPoint(s, p)
        frame = np.vstack([pt.frame1, pt.frame2])
        for a in frame:
            for b in frame:
                want = oracles.fd_second_fundamental_form(s.immersion, p, a, b)[0]
                assert norm(s, p, pt.h(a, b) - want) <= 1e-6


# -- norm identity -------------------------------------------------------------------------

def test_norm_identity_examples():
    s = identity_flat()
    r = di.norm_identity_check(s, pts(s)[0])
    assert r["h_sq"] == pytest.approx(0, abs=1e-20) and r["lower_bound"] == pytest.approx(0, abs=1e-20)
    # both factors of the cylinder are totally geodesic (a vertical line and the identity): equality
    for p in pts(cylinder()):
        r = di.norm_identity_check(cylinder(), p)
        assert r["lower_bound"] == pytest.approx(4.0, rel=1e-12)
        assert r["gap"] == pytest.approx(0, abs=1e-6 * r["h_sq"])
    for p in pts(catenoid()):
        r = di.norm_identity_check(catenoid(), p)
        assert r["relative_residual"] <= 1e-6
        assert r["gap"] > 1e-3
        assert r["gap"] == pytest.approx(r["h0_sq"], rel=1e-6)


def test_norm_identity_on_generic_scenarios():
    for s in (generic4(), s3(), round_sphere()):
        for p in pts(s, 4):
            r = di.norm_identity_check(s, p)
            assert r["relative_residual"] <= 1e-6
            assert r["inequality_holds"]


# -- characterisations ---------------------------------------------------------------------

def test_ni_geodesy_both_directions():
    s = cylinder()
    n1 = di.ni_geodesy_check(s, 1, pts(s, 8))
    n2 = di.ni_geodesy_check(s, 2, pts(s, 8))
    # vertical line: N1-totally geodesic since ρ2 = 1; the circle leaves are not (ρ1 = t varies)
    assert n1["ni_totally_geodesic"] is True and n1["consistent"] is True
    assert n2["ni_totally_geodesic"] is False and n2["consistent"] is True
    assert n2["direct_residual"] > 1
    tg = di.totally_geodesic_check(s, pts(s, 8))
    assert tg["totally_geodesic"] is False and tg["consistent"] is True
    flat = identity_flat()
    assert di.totally_geodesic_check(flat, pts(flat, 8))["totally_geodesic"] is True


def test_umbilical_characterisation():
    r = di.umbilical_check(round_sphere(), pts(round_sphere(), 8))
    assert r["umbilical"] is True and r["consistent"] is True
    r = di.umbilical_check(catenoid(), pts(catenoid(), 8))
    assert r["umbilical"] is False and r["consistent"] is True
    A, L = generic3_ambient().factor1, generic3_ambient().factor2
    const = identity_scenario(dwp.build_dwp(A, L, "2", "3"))
    r = di.umbilical_check(const, pts(const, 8))
    assert r["umbilical"] is True and r["consistent"] is True


def test_minimality_on_catenoid_and_cylinder():
    r = di.minimality_check(catenoid(), pts(catenoid(), 8))
    assert r["mean_curvature_norm"] <= 1e-6
    assert r["minimal"] is True and r["minimal_consistent"] is True
    assert r["factor_relation_residual_1"] <= 1e-5
    assert r["trace_identity_residual"] <= 1e-6
    r = di.minimality_check(cylinder(), pts(cylinder(), 8))
    assert r["mean_curvature_norm"] == pytest.approx(1.0, abs=1e-6)
    assert r["minimal"] is False and r["factor_relation"] is False and r["minimal_consistent"] is True
    r = di.minimality_check(identity_flat(), pts(identity_flat(), 8))
    assert r["minimal"] is True and r["n1_consistent"] is True and r["n2_consistent"] is True


def test_trace_identity_holds_without_minimality():
    for s in (cylinder(), generic4(), s3()):
        for p in pts(s, 3):
            assert di.minimal_trace_residual(s, p) <= 1e-6


# -- shape operators along factor-aligned normals --------------------------------------------

def test_normal_fields_are_normal_and_factor_aligned():
    for s in (catenoid(), generic4()):
        for i in (1, 2):
            for eta in di.normal_fields(s, i):
                for p in pts(s, 3):
                    val, _ = eta.jet(p)
                    assert not np.any(val[s.ambient.block(3 - i)])
                    di.DwpPoint(s, p).geo.check_normal(val)


def test_shape_closed_form_examples():
    s = catenoid()
    eta = max(di.normal_fields(s, 1), key=lambda f: abs(f.jet(pts(s)[0])[0][0]))
    for p in pts(s):
        pt = di.DwpPoint(s, p)
        val, _ = eta.jet(p)
        z = pt.frame2[0]
        r = di.shape_operator_closed_form(s, p, eta, 1, z)
        np.testing.assert_allclose(r["A_direct"], -pt.d_log_rho(1, val) * z, atol=1e-8)
        assert r["A_residual"] <= 1e-6 and r["D_residual"] <= 1e-6
    flat = identity_flat()
    assert di.shape_closed_form_residuals(flat, pts(flat)[0])["normals1"] == 0


def test_shape_closed_form_rejects_misaligned_normal():
    s = catenoid()
    p = pts(s)[0]
    both = sm.FieldAlong.build(["1", "0", "1"], s.source.coords)
    with pytest.raises(ValueError, match="tangent to factor"):
        di.shape_operator_closed_form(s, p, both, 1, [1, 0])


def test_shape_closed_form_residuals():
    for s in (catenoid(), generic4(), s3(), round_sphere(), cylinder()):
        for p in pts(s, 4):
            r = di.shape_closed_form_residuals(s, p)
            assert max(r["A_eta1"], r["A_eta2"], r["D_eta1"], r["D_eta2"]) <= 1e-6
            assert r["normals1"] + r["normals2"] > 0


# -- space-form relations -----------------------------------------------------------------

def test_leaf_laplacian_matches_coordinate_oracle():
    s = generic4()
    for p in pts(s, 3):
        pt = di.DwpPoint(s, p)
        for i in (1, 2):
            Ni = s.phi(i).source
            q = pt.p1 if i == 1 else pt.p2
            want = oracles.coordinate_laplacian(Ni, s.f(i), q) / pt.f[3 - i] ** 2
            assert pt.leaf_laplacian(i) == pytest.approx(want, abs=1e-5)


def test_h1_dot_h2():
    s = identity_flat()
    r = di.h1_dot_h2_check(s, pts(s)[0])
    assert r["inner_product"] == 0 and abs(r["rhs"]) <= 1e-12
    for s in (catenoid(), cylinder(), round_sphere(), s3(), bundled("sphere_warped").scenario):
        for p in pts(s, 4):
            assert di.h1_dot_h2_check(s, p)["residual"] <= 1e-6
    harm = bundled("harmonic_case").scenario
    for p in pts(harm):
        assert abs(di.h1_dot_h2_check(harm, p)["inner_product"]) <= 1e-8


def test_perpendicularity_both_sides():
    for s, expected in ((bundled("harmonic_case").scenario, True), (cylinder(), True), (catenoid(), False)):
        r = di.perpendicularity_check(s, pts(s)[0])
        assert r["perpendicular"] is expected and r["consistent"] is True


def test_a_h_closed_form():
    s = identity_flat()
    r = di.a_h_closed_form_check(s, pts(s)[0])
    assert r["A_H1"] <= 1e-12 and r["A_H2"] <= 1e-12
    for s in (catenoid(), cylinder(), round_sphere(), s3()):
        for p in pts(s, 4):
            r = di.a_h_closed_form_check(s, p)
            assert r["A_H1"] <= 1e-6 and r["A_H2"] <= 1e-6
