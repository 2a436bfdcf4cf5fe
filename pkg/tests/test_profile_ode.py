import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import solve_ivp

from cmcfoliation import profile_ode as po
from cmcfoliation.radial_metric import sphere_volume


def scipy_reference(profile, H, r, sigma, s_end):
    """Independent integration of the profile system with scipy's DOP853."""
    k, m = profile.n - 2, profile.n - 1

    def rhs(_, y):
        phi, dphi, _ = profile.eval(y[0])
        return [math.cos(y[2]), math.sin(y[2]), m * H - k * dphi / phi * math.sin(y[2])]

    sol = solve_ivp(rhs, (0.0, s_end), [r, 0.0, sigma], method="DOP853", rtol=1e-12,
                    atol=1e-13)
    return sol.y[:, -1]


# -- pointwise ----------------------------------------------------------------

def test_rhs_and_first_integral(profile):
    st0 = po.ProfileState(0.0, 0.3, 0.0, 0.4)
    dr, dz, dg = po.ode_rhs(st0, profile, 1.0)
    phi, dphi, _ = profile.eval(0.3)
    assert (dr, dz) == (math.cos(0.4), math.sin(0.4))
    assert dg == pytest.approx(2.0 - dphi / phi * math.sin(0.4), rel=1e-15)
    J = po.first_integral(st0, profile, 1.0)
    assert J == pytest.approx(phi * math.sin(0.4) - profile.h(0.3), rel=1e-14)


def test_axis_is_singular(profile):
    with pytest.raises(po.SingularAxisError):
        po.ode_rhs(po.ProfileState(0, 0.0, 0, 0), profile, 1.0)
    with pytest.raises(po.SingularAxisError):
        po.integrate(po.ProfileState(0, 0.0, 0, 0), profile, 1.0)


def test_graph_slope_blows_up_at_r1(profile):
    assert po.graph_slope(0.0, profile, 1.0) == 0.0
    with pytest.raises(po.BlowUpError):
        po.graph_slope(profile.r1, profile, 1.0)


# -- integrator ---------------------------------------------------------------

@pytest.mark.parametrize("r,sigma,H", [(0.3, 0.2, 1.0), (0.6, 2.0, 0.5), (0.1, 2.5, 2.0),
                                       (0.4, 0.0, 1.3)])
def test_integrator_matches_scipy(profile, r, sigma, H):
    tr = po.integrate(po.ProfileState(0.0, r, 0.0, sigma), profile, H,
                      po.StopRule(max_s=1.0, r_below=1e-9, r_above=math.inf))
    assert tr.stop_reason == "max_s"
    ref = scipy_reference(profile, H, r, sigma, tr.s[-1])
    np.testing.assert_allclose([tr.r[-1], tr.z[-1], tr.sigma[-1]], ref, atol=1e-8)


def test_first_integral_conserved_over_long_run(profile):
    tr = po.integrate(po.ProfileState(0.0, 0.35, 0.0, 0.3), profile, 1.0,
                      po.StopRule(max_s=20.0))
    assert tr.max_J_drift / (1.0 + abs(tr.J0)) < 1e-8


@settings(max_examples=15, deadline=None)
@given(r=st.floats(0.02, 0.98), sigma=st.floats(-math.pi, math.pi), H=st.floats(0.2, 3.0))
def test_first_integral_property(profile, r, sigma, H):
    tr = po.integrate(po.ProfileState(0.0, r, 0.0, sigma), profile, H,
                      po.StopRule(max_s=5.0))
    assert tr.max_J_drift / (1.0 + abs(tr.J0)) < 1e-8


def test_vertical_translation_is_exact(profile):
    a = po.integrate(po.ProfileState(0.0, 0.4, 0.0, 0.7), profile, 1.0, po.StopRule(max_s=3))
    b = po.integrate(po.ProfileState(0.0, 0.4, 2.5, 0.7), profile, 1.0, po.StopRule(max_s=3))
    np.testing.assert_array_equal(a.r, b.r)
    np.testing.assert_array_equal(a.z + 2.5, b.z)
    c = a.shifted(2.5)
    np.testing.assert_array_equal(c.z, b.z)


def test_stop_rules(profile):
    S = po.ProfileState
    # only J = 0 curves reach the axis: run the graph leaf inwards
    sig = math.pi - math.asin(profile.h_ratio(0.2))
    ax = po.integrate(S(0.0, 0.2, 0.0, sig), profile, 1.0, po.StopRule(max_s=5))
    assert ax.stop_reason == "axis" and ax.r[-1] == pytest.approx(1e-6, abs=1e-12)
    up = po.integrate(S(0.0, 0.9, 0.0, 0.0), profile, 0.2, po.StopRule(max_s=5, r_above=0.95))
    assert up.stop_reason == "r_above" and up.r[-1] == pytest.approx(0.95, abs=1e-12)
    zz = po.integrate(S(0.0, 0.3, 1.0, 1.0), profile, 1.0, po.StopRule(max_s=5, z_above=1.2))
    assert zz.stop_reason == "z_above" and zz.z[-1] == pytest.approx(1.2, abs=1e-12)
    vt = po.integrate(S(0.0, 0.3, 0.0, 0.0), profile, 1.0, po.StopRule(max_s=5, vertical=True))
    assert vt.stop_reason == "vertical" and abs(math.cos(vt.sigma[-1])) < 1e-10


def test_reflect_extend(profile):
    vt = po.integrate(po.ProfileState(0.0, 0.3, 0.0, 0.0), profile, 1.0,
                      po.StopRule(max_s=5, vertical=True))
    ext = po.reflect_extend(vt)
    assert len(ext) == 2 * len(vt) - 1
    assert np.all(np.diff(ext.s) > 0)
    np.testing.assert_allclose(ext.J, ext.J[0], atol=1e-8)
    # the reflected half is again a solution: compare with direct continuation
    cont = po.integrate(vt.state(len(vt) - 1), profile, 1.0,
                        po.StopRule(max_s=ext.s[-1] - vt.s[-1]))
    assert cont.r[-1] == pytest.approx(ext.r[-1], abs=1e-7)
    assert cont.z[-1] == pytest.approx(ext.z[-1], abs=1e-7)
    with pytest.raises(po.PreconditionError):
        po.reflect_extend(po.integrate(po.ProfileState(0, 0.3, 0, 0.0), profile, 1.0,
                                       po.StopRule(max_s=0.1)))


def test_mirror_is_involution(profile):
    tr = po.integrate(po.ProfileState(0.0, 0.4, 0.0, 0.3), profile, 1.0, po.StopRule(max_s=1))
    back = po.mirror(po.mirror(tr, 5), -6)
    np.testing.assert_allclose(back.r, tr.r, atol=1e-15)
    np.testing.assert_allclose(back.z, tr.z, atol=1e-14)
    np.testing.assert_allclose(back.sigma, tr.sigma, atol=1e-14)


def test_flux_equals_scaled_first_integral(profile):
    for r, sig, H in ((0.3, 0.5, 1.0), (0.7, -0.4, 0.6), (0.1, 2.0, 2.0)):
        st0 = po.ProfileState(0.0, r, 0.0, sig)
        vol = sphere_volume(profile.k)
        assert po.flux_revolution(st0, profile, H) == pytest.approx(
            vol * po.first_integral(st0, profile, H), abs=1e-11)


# -- graph leaf -----------------------------------------------------------------

def test_graph_leaf_properties(profile):
    tr = po.graph_integrate(profile, num=2001)
    assert np.max(np.abs(tr.J)) < 1e-8
    assert np.all(np.diff(tr.z) > 0.0)
    res = po.graph_residual(tr)
    assert max(res["r"], res["z"], res["sigma"]) < 1e-6
    assert po.graph_height(profile.r1 - 1e-6, profile) > po.graph_height(profile.r1 - 1e-3,
                                                                        profile)


def test_graph_closed_form_matches_quadrature(profile):
    # the closed-form tail and pure quadrature (H passed as a perturbed float) agree
    a = po.graph_integrate(profile, r_stop=0.45, num=201)
    b = po.graph_integrate(profile, H=profile.H * (1 + 1e-15), r_stop=0.45, num=201)
    np.testing.assert_allclose(a.z, b.z, atol=1e-9)
    np.testing.assert_allclose(a.s, b.s, atol=1e-9)


def test_graph_matches_ode_from_cap(profile):
    st = po.stitched_graph_leaf(profile)
    g = po.graph_integrate(profile, num=2001)
    r = st.r[::10]
    dz = st.z[::10] - np.array([po.graph_height(x, profile) for x in r])
    # z(r) is steep near r1: measure the normal distance between the curves
    normal = np.abs(dz) / np.sqrt(1.0 + po.graph_slope(r, profile, profile.H) ** 2)
    assert normal.max() < 1e-8
    assert np.max(np.abs(st.J)) < 1e-8


def test_length_law_spot_value(profile):
    assert po.arc_length(profile, 0.3, 0.45) == pytest.approx(math.log(4.0), abs=1e-6)


def test_length_law_random_pairs(profile):
    rng = np.random.default_rng(1)
    r1 = profile.r1
    for _ in range(20):
        a, b = np.sort(rng.uniform(profile.r0, r1 - 1e-4, 2))
        assert po.arc_length(profile, a, b) == pytest.approx(
            math.log((r1 - a) / (r1 - b)), abs=1e-6)


def test_arc_length_errors(profile):
    assert po.arc_length(profile, 0.2, 0.2) == 0.0
    with pytest.raises(po.BlowUpError):
        po.arc_length(profile, 0.1, profile.r1)
    with pytest.raises(po.PreconditionError):
        po.graph_integrate(profile, r_stop=profile.r1)


def test_trajectory_io(profile, tmp_path):
    tr = po.integrate(po.ProfileState(0.0, 0.4, 0.0, 0.3), profile, 1.0, po.StopRule(max_s=1))
    p = tmp_path / "t.csv"
    tr.write_csv(p)
    data = np.loadtxt(p, delimiter=",", skiprows=1)
    assert p.read_text().splitlines()[0] == "s,r,z,sigma,J"
    np.testing.assert_array_equal(data[:, 1], tr.r)
    assert '"stop_reason": "max_s"' in tr.summary_json()


# -- spot values of the contract ---------------------------------------------------

def test_rhs_spot_values(profile):
    from cmcfoliation.radial_metric import cylinder_H

    assert po.ode_rhs(po.ProfileState(0, 0.3, 0, 0.0), profile, 1.0) == (1.0, 0.0, 2.0)
    c = 0.6
    dr, dz, dg = po.ode_rhs(po.ProfileState(0, c, 0, math.pi / 2), profile,
                            cylinder_H(c, profile))
    assert abs(dr) < 1e-16 and dz == 1.0 and abs(dg) < 1e-15


@pytest.mark.parametrize("c", [0.5, 0.6, 0.7, 0.9])
def test_cylinders_are_fixed_points(profile, c):
    from cmcfoliation.radial_metric import cylinder_H

    H = cylinder_H(c, profile)
    tr = po.integrate(po.ProfileState(0.0, c, 0.0, math.pi / 2), profile, H,
                      po.StopRule(max_s=10.0, r_above=math.inf))
    assert np.max(np.abs(tr.r - c)) < 1e-9
    np.testing.assert_allclose(tr.J, profile.phi(c) - profile.h(c) * H / profile.H,
                               atol=1e-12)
    # the reflection of an upward cylinder ray is the downward ray
    down = po.mirror(tr, 0)
    np.testing.assert_allclose(down.r, c, atol=1e-9)
    assert np.all(down.z <= 1e-12)


def test_unit_speed(profile):
    tr = po.integrate(po.ProfileState(0.0, 0.4, 0.0, 1.0), profile, 1.0, po.StopRule(max_s=3))
    assert po.ode_residual(tr)["unit_speed"] < 1e-10


def test_graph_slope_closed_form_and_sign(profile):
    r = np.linspace(profile.r0, profile.r1, 101)[:-1]
    ref = np.sqrt(1 - (profile.r1 - r) ** 2) / (profile.r1 - r)
    np.testing.assert_allclose(po.graph_slope(r, profile, 1.0), ref, rtol=1e-9)
    allr = np.linspace(0, profile.r1, 5001)[:-1]
    assert np.all(po.graph_slope(allr, profile, 1.0) >= 0.0)
    assert po.graph_slope(1e-6, profile, 1.0) < 1e-5


def test_axis_entry_is_perpendicular(profile):
    assert abs(po.graph_sigma(1e-4, profile)) < 1e-3
    g = po.graph_integrate(profile, r_stop=0.1, num=50)
    assert g.sigma[0] == 0.0


def test_flux_spot_values(profile):
    from cmcfoliation.radial_metric import sphere_volume

    vol = sphere_volume(profile.k)
    r = 0.3
    on_graph = po.ProfileState(0.0, r, 0.0, float(po.graph_sigma(r, profile)))
    assert abs(po.flux_revolution(on_graph, profile, 1.0)) < 1e-12
    c = 0.7
    cyl = po.ProfileState(0.0, c, 0.0, math.pi / 2)
    assert po.flux_revolution(cyl, profile, 1.0) == pytest.approx(
        vol * (profile.phi(c) - profile.h(c)), abs=1e-12)
    assert abs(po.flux_revolution(po.ProfileState(0, 1e-6, 0, 0.0), profile, 0.0)) < 1e-12
