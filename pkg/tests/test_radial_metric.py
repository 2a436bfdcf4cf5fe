import math

import mpmath as mp
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.integrate import quad

from cmcfoliation import radial_metric as rm


def oracle_phi(r, n, H, r1):
    """Closed form and derivatives by mpmath differentiation (independent of the library)."""
    mp.mp.dps = 30
    k = n - 2
    f = lambda x: mp.e ** (mp.mpf(n - 1) / k * H * mp.asin(x - r1)) \
        / (1 - (r1 - x) ** 2) ** (mp.mpf(1) / (2 * k))
    return tuple(float(mp.diff(f, mp.mpf(r), j)) for j in range(3))


# -- closed form --------------------------------------------------------------

def test_phi_explicit_is_one_at_r1():
    for n in (3, 4, 7):
        assert rm.phi_explicit(0.5, n, 2.3, 0.5)[0] == 1.0


def test_phi_explicit_spot_value():
    val = rm.phi_explicit(0.3, 3, 1.0, 0.5)[0]
    assert val == pytest.approx(math.exp(2 * math.asin(-0.2)) / math.sqrt(0.96), rel=1e-15)


@pytest.mark.parametrize("n,H,r", [(3, 1.0, 0.3), (4, 0.7, 0.1), (5, 2.0, 0.45), (3, 1.0, -0.3)])
def test_phi_explicit_derivatives_match_oracle(n, H, r):
    got = rm.phi_explicit(r, n, H, 0.5)
    ref = oracle_phi(r, n, H, 0.5)
    for g, e in zip(got, ref):
        assert g == pytest.approx(e, rel=1e-12)


def test_phi_explicit_log_derivative_at_r1_by_finite_difference():
    # the raw formula extends past r1 when the asymptote is moved to 0.9
    n, H, h = 3, 1.0, 1e-6
    f = lambda x: rm.phi_explicit(x, n, H, 0.5)[0]
    g = lambda x: rm.phi_explicit(x, n, H, 0.5 + 0.4)[0]
    assert (f(0.5) - f(0.5 - h)) / h / f(0.5) == pytest.approx((n - 1) * H / (n - 2), abs=1e-5)
    r = 0.5
    fd = (g(r + h) - g(r - h)) / (2 * h) / g(r)
    assert fd == pytest.approx(rm.phi_explicit(r, n, H, 0.9)[1] / g(r), abs=1e-7)
    assert rm.phi_explicit(0.5, n, H, 0.5)[1] == pytest.approx((n - 1) * H / (n - 2), abs=1e-14)


def test_phi_explicit_domain_error():
    with pytest.raises(rm.DomainError):
        rm.phi_explicit(-0.6, 3, 1.0, 0.5)


def test_n_below_three_rejected():
    with pytest.raises(rm.DomainError):
        rm.build_profile(n=2)


# -- assembled profile --------------------------------------------------------

def test_eval_at_axis(profile):
    assert profile.eval(0.0) == (0.0, 1.0, 0.0)


def test_eval_flat_region(profile):
    vals = [profile.eval(r) for r in (profile.r2, 0.5 * (profile.r2 + 1), 1.0)]
    assert vals[0][0] == vals[1][0] == vals[2][0]
    assert all(v[1] == 0.0 and v[2] == 0.0 for v in vals)


def test_eval_matches_closed_form_on_middle_piece(profile):
    r = np.linspace(profile.r0, profile.r1, 301)[1:]
    got = profile.eval(r)
    ref = rm.phi_explicit(r, profile.n, profile.H, profile.r1)
    for g, e in zip(got, ref):
        np.testing.assert_allclose(g, e, rtol=2e-15, atol=0)
    assert profile.eval(profile.r1) == rm.phi_explicit(profile.r1, profile.n, profile.H,
                                                       profile.r1)


def test_eval_domain(profile):
    for bad in (-1e-12, 1.0 + 1e-12, float("nan")):
        with pytest.raises(rm.DomainError):
            profile.eval(bad)


def test_phi_positive(profile):
    r = np.linspace(0, 1, 20_001)[1:]
    assert np.all(profile.phi(r) > 0.0)


@pytest.mark.parametrize("fixture", ["profile", "profile4"])
def test_junctions_are_c2(fixture, request):
    p = request.getfixturevalue(fixture)
    jumps = rm.junction_jumps(p)
    assert set(jumps) == {f"r{i}_d{d}" for i in range(3) for d in range(3)}
    assert max(jumps.values()) < 1e-9


def test_even_derivatives_vanish_at_axis(profile):
    h = 1e-3 * profile.r0
    f = [float(rm.cap_formula(j * h, profile)[0]) for j in (-2, -1, 0, 1, 2)]
    # odd function => even central differences vanish
    assert f[2] == 0.0
    assert abs((f[3] - 2 * f[2] + f[1]) / h ** 2) < 1e-6
    assert abs((f[4] - 4 * f[3] + 6 * f[2] - 4 * f[1] + f[0]) / h ** 4) < 1e-3
    assert f[0] == -f[4] and f[1] == -f[3]


def test_blend_monotone_and_c_rule(profile):
    r = np.linspace(profile.r1, profile.r2, 4001)
    assert np.all(profile.eval(r)[1] >= 0.0)
    assert profile.c >= 1.05 * profile.phi(profile.r1) - 1e-15


# -- h ------------------------------------------------------------------------

def test_h_at_zero(profile):
    assert rm.h_func(0.0, profile) == 0.0
    assert rm.h_func(0.0, profile, method="quad") == 0.0


def test_h_equals_one_at_r1(profile):
    assert rm.h_func(profile.r1, profile) == pytest.approx(1.0, abs=1e-12)


def test_h_matches_independent_quadrature(profile):
    p = profile
    for r in (0.03, p.r0, 0.4, p.r1, 0.6, p.r2, 0.9, 1.0):
        pts = [b for b in (p.r0, p.r1, p.r2) if b < r]
        ref = (p.n - 1) * p.H * quad(lambda u: p.phi(u) ** p.k, 0.0, r, points=pts or None,
                                     epsabs=1e-13, epsrel=1e-13, limit=200)[0]
        assert rm.h_func(r, p) == pytest.approx(ref, abs=1e-12)


def test_h_closed_form_on_middle_piece(profile):
    r = np.linspace(profile.r0, profile.r1, 101)
    np.testing.assert_allclose(profile.h(r), rm.h_closed_form(r, 3, 1.0, 0.5), atol=1e-12)


def test_h_ratio_sqrt_law(profile):
    r = np.linspace(profile.r0, profile.r1, 2001)[:-1]
    np.testing.assert_allclose(profile.h_ratio(r), np.sqrt(1 - (profile.r1 - r) ** 2),
                               atol=1e-9)


def test_h_ratio_range_and_limits(profile):
    r = np.linspace(0, profile.r1, 10_001)[:-1]
    q = profile.h_ratio(r)
    assert np.all(q >= 0.0) and np.all(q < 1.0)
    assert profile.h_ratio(1e-5) < 1e-3
    slope = (profile.h_ratio(1e-4) - profile.h_ratio(0.0)) / 1e-4
    assert slope == pytest.approx(profile.H, abs=1e-3)


# -- curvature quantities ----------------------------------------------------

def test_kappa_r_and_cylinder_H(profile):
    p = profile
    assert rm.cylinder_H(p.r1, p) == pytest.approx(p.H, abs=1e-9)
    assert rm.kappa_r(p.r1, p) == pytest.approx(2.0, abs=1e-9)
    flat = np.linspace(p.r2, 1.0, 50)
    assert np.all(rm.cylinder_H(flat, p) == 0.0)
    assert np.all(rm.kappa_r(flat, p) == 0.0)
    r = np.linspace(1e-3, 1, 999)
    np.testing.assert_allclose(rm.cylinder_H(r, p) * 2.0, rm.kappa_r(r, p), rtol=1e-15)
    with pytest.raises(rm.DomainError):
        rm.kappa_r(0.0, p)
    with pytest.raises(rm.DomainError):
        rm.cylinder_H(0.0, p)


def test_flat_cap_stretch():
    # zero cap coefficients give phi(r) = r on [0, r0]: a round sphere in flat space
    p = rm.build_profile()
    flat = rm.RadialProfile.from_coefficients(3, 1.0, p.r0, p.r1, p.r2, np.zeros(4),
                                              p.blend_coeffs, p.c)
    r = np.linspace(0.01, 0.9 * p.r0, 50)
    np.testing.assert_allclose(flat.phi(r), r, rtol=1e-15)
    np.testing.assert_allclose(rm.kappa_r(r, flat), 1.0 / r, rtol=1e-14)
    np.testing.assert_allclose(rm.ricci_normal(r, flat), 0.0, atol=1e-12)


def test_ricci_normal(profile):
    p = profile
    assert np.all(rm.ricci_normal(np.linspace(p.r2, 1, 20), p) == 0.0)
    r = np.linspace(0, 1, 20_001)[1:]
    assert rm.ricci_normal(r, p).min() <= -(p.n - 1) * p.H ** 2
    with pytest.raises(rm.DomainError):
        rm.ricci_normal(0.0, p)


def test_verify_profile_report_passes(profile, profile4):
    for p in (profile, profile4):
        rep = rm.verify_profile(p)
        assert rep.passed, [c.name for c in rep.failures()]
        assert rep["cylinder_H_at_r1"].provenance == "PAPER"


# -- construction ------------------------------------------------------------

def test_r0_halving_records_request():
    p = rm.build_profile(n=5, H=0.5, r0=0.2, r1=0.6, r2=0.8)
    assert p.r0_requested == 0.2
    assert p.r0 <= 0.2


def test_bad_parameters():
    with pytest.raises(rm.DomainError):
        rm.build_profile(r1=0.8, r2=0.7)
    with pytest.raises(rm.DomainError):
        rm.build_profile(H=-1.0)


# -- serialization -----------------------------------------------------------

def test_json_round_trip(profile):
    q = rm.RadialProfile.from_json(profile.to_json())
    r = np.linspace(0, 1, 513)
    for a, b in zip(profile.eval(r), q.eval(r)):
        np.testing.assert_array_equal(a, b)
    d = profile.to_dict()
    assert {"n", "H", "r0", "r1", "r2", "cap_coeffs", "blend_coeffs", "c"} <= set(d)


def test_csv_round_trip(profile, tmp_path):
    path = tmp_path / "p.csv"
    rm.write_profile_csv(path, profile, num=101)
    assert path.read_text().splitlines()[0] == "r,phi,dphi,ddphi,h,kappa_r,cylinder_H"
    rows = rm.read_profile_csv(path)
    np.testing.assert_array_equal(rows, rm.sample_rows(profile, np.linspace(0, 1, 101)))


# -- properties --------------------------------------------------------------

@settings(max_examples=25, deadline=None)
@given(n=st.integers(3, 6), H=st.floats(0.2, 3.0), r1=st.floats(0.2, 0.8),
       x=st.floats(0.01, 0.99))
def test_h_ratio_identity_closed_form(n, H, r1, x):
    r = r1 - x * min(r1, 0.99)
    phi = rm.phi_explicit(r, n, H, r1)[0]
    ratio = rm.h_closed_form(r, n, H, r1) / phi ** (n - 2)
    assert ratio == pytest.approx(math.sqrt(1 - (r1 - r) ** 2), rel=1e-12)


@settings(max_examples=10, deadline=None)
@given(n=st.integers(3, 5), H=st.floats(0.3, 2.5))
def test_constructed_profiles_satisfy_invariants(n, H):
    p = rm.build_profile(n=n, H=H)
    rep = rm.verify_profile(p)
    assert rep.passed, [(c.name, c.value) for c in rep.failures()]
