import math

import numpy as np
import pytest
from scipy.optimize import brentq

from cmcfoliation import profile_ode as po
from cmcfoliation import reeb_foliation as rf
from cmcfoliation.radial_metric import DomainError, cylinder_H, sphere_volume


# -- leaves ---------------------------------------------------------------------

def test_component_checks_pass(component):
    assert component.checks.passed, [(c.name, c.value) for c in component.checks.failures()]


def test_graph_leaf_is_cmc(component):
    mc = component.leaf_mean_curvature(component.graph_leaf(0.3))
    assert mc["max"] - mc["min"] < 1e-6
    assert mc["mean"] == pytest.approx(component.H, abs=1e-6)


def test_graph_leaf_cmc_independent_oracle(component):
    # mean curvature of the graph z(r) from its flat slope: no turning-angle formula involved
    p = component.profile
    r = np.array([0.05, 0.15, 0.3, 0.4, 0.45, 0.49])
    h = 1e-5
    zp = po.graph_slope(r, p, p.H)
    zpp = (po.graph_slope(r + h, p, p.H) - po.graph_slope(r - h, p, p.H)) / (2 * h)
    kappa = zpp / (1 + zp ** 2) ** 1.5
    sin_sig = zp / np.sqrt(1 + zp ** 2)
    phi, dphi, _ = p.eval(r)
    H = ((p.n - 2) * dphi / phi * sin_sig + kappa) / (p.n - 1)
    np.testing.assert_allclose(H, p.H, atol=1e-6)


def test_cylinder_leaves(component):
    p = component.profile
    for r in (p.r1, 0.6, p.r2, 0.9, 1.0):
        leaf = component.cylinder_leaf(r)
        assert leaf.H_leaf == cylinder_H(r, p)
        assert component.leaf_mean_curvature(leaf)["mean"] == pytest.approx(leaf.H_leaf,
                                                                            abs=1e-12)
    with pytest.raises(DomainError):
        component.cylinder_leaf(0.3)


def test_mean_curvature_profile(component):
    p = component.profile
    r = np.linspace(0.0, 1.0, 20_001)
    Hr = component.mean_curvature_profile(r)
    assert np.max(np.abs(np.diff(Hr))) < 1e-2
    assert component.mean_curvature_profile(p.r1) == pytest.approx(p.H, abs=1e-9)
    assert np.all(component.mean_curvature_profile(np.linspace(p.r2, 1, 50)) == 0.0)


def test_z_graph(component):
    p = component.profile
    r = np.linspace(0, p.r1 - 1e-6, 2000)
    z = component.z_graph(r)
    assert z[0] == 0.0 and np.all(np.diff(z) > 0.0)
    assert component.z_graph(p.r1 - 1e-6) > component.z_graph(p.r1 - 1e-3)
    for x in (0.1, 0.3, 0.45):
        assert component.z_graph(x) == pytest.approx(po.graph_height(x, p), abs=1e-9)
    with pytest.raises(DomainError):
        component.z_graph(p.r1)


def test_leaf_through_point(component):
    rng = np.random.default_rng(3)
    for _ in range(200):
        pt = (rng.uniform(0, 1), rng.uniform(0, 2 * math.pi), rng.uniform(-2, 2))
        leaf = component.leaf_at_point(pt)
        assert component.contains(leaf, pt)
        if leaf.kind == "graph":
            assert 0.0 <= leaf.z0 < component.lam
            up = component.leaf_at_point((pt[0], pt[1], pt[2] + component.lam))
            d = abs(up.z0 - leaf.z0)
            assert min(d, component.lam - d) < 1e-12
        else:
            assert leaf.radius == pt[0]


def test_leaf_kind_accessors(component):
    g = component.graph_leaf(0.25)
    c = component.cylinder_leaf(0.8)
    with pytest.raises(AttributeError):
        g.radius
    with pytest.raises(AttributeError):
        c.z0


# -- volumes ----------------------------------------------------------------------

def test_volume_independent_of_delta(component):
    p = component.profile
    vols = np.array([component.cylinder_volume(d) for d in np.linspace(p.r2, 1, 41)])
    assert np.ptp(vols) <= 1e-12 * vols.max()
    assert vols[0] == pytest.approx(p.phi(1.0) ** p.k * sphere_volume(p.k), rel=1e-15)


def test_choose_lambda_against_bisection(profile):
    for target in (0.5, 10.0, 123.0):
        lam = rf.choose_lambda(target, profile)
        oracle = brentq(lambda L: rf.cylinder_volume(profile.r2, profile, L) - target,
                        1e-6, 1e6, xtol=1e-14, rtol=1e-15)
        assert lam == pytest.approx(oracle, rel=1e-10)
        assert rf.choose_lambda(rf.cylinder_volume(0.9, profile, lam), profile) == \
            pytest.approx(lam, rel=1e-10)
    with pytest.raises(DomainError):
        rf.choose_lambda(-1.0, profile)


def test_bad_lambda(profile):
    with pytest.raises(DomainError):
        rf.build_enlarged_reeb(profile=profile, lam=0.0, verify=False)


# -- turbularization --------------------------------------------------------------

@pytest.mark.parametrize("sign", [1, -1])
@pytest.mark.parametrize("n", [3, 4, 5])
def test_turb_suite(sign, n):
    surf = rf.turb_model_surface(0.1, sign=sign, n=n)
    rep = rf.verify_turb(surf, seed=1)
    assert rep.passed, [(c.name, c.value) for c in rep.failures()]


@pytest.mark.parametrize("wrap_rate", [0.25, 4.0])
def test_turb_suite_wrap_rate(wrap_rate):
    rep = rf.verify_turb(rf.turb_model_surface(0.1, wrap_rate=wrap_rate), seed=2)
    assert rep.passed, [(c.name, c.value) for c in rep.failures()]


def test_turb_flat_exactly():
    surf = rf.turb_model_surface(0.05)
    rho = np.linspace(6 * 0.05, 8 * 0.05, 1001)
    assert np.all(surf.T(rho) == 0.0)


def test_turb_monotone_and_spiralling():
    e = 0.1
    for sign in (1, -1):
        surf = rf.turb_model_surface(e, sign=sign)
        rho = 4 * e + np.geomspace(1e-10, 2 * e, 500)
        T = surf.T(rho)
        assert np.all(np.diff(sign * T) >= 0.0)
        assert -sign * T[0] > 1e8
        d = surf.distance_to_core_boundary(rho)
        assert np.all(np.diff(d) > 0) and d[0] < 1e-9


def test_turb_rotation_invariance_own_rotations():
    rng = np.random.default_rng(7)
    surf = rf.turb_model_surface(0.1, n=4)
    for _ in range(100):
        rho = rng.uniform(0.41, 0.8)
        x = surf.point(rho, rng.normal(size=3))
        q, _ = np.linalg.qr(rng.normal(size=(3, 3)))
        assert surf.contains(np.append(q @ x[:-1], x[-1]))


def test_turb_domain():
    surf = rf.turb_model_surface(0.1)
    with pytest.raises(DomainError):
        surf.T(0.4)
    with pytest.raises(DomainError):
        surf.T(0.81)
    with pytest.raises(DomainError):
        rf.turb_model_surface(0.0)
    with pytest.raises(DomainError):
        rf.turb_model_surface(0.1, sign=0)


def test_smooth_cutoff():
    x = np.linspace(-1, 3, 4001)
    c = rf.smooth_cutoff(x, 1.0, 2.0)
    assert np.all(c[x <= 1.0] == 1.0) and np.all(c[x >= 2.0] == 0.0)
    assert np.all(np.diff(c) <= 0.0)


# -- meshes -----------------------------------------------------------------------

def test_meshes(component):
    cyl = rf.leaf_mesh(component, component.cylinder_leaf(0.8), 24)
    np.testing.assert_allclose(np.hypot(cyl.vertices[:, 0], cyl.vertices[:, 1]), 0.8,
                               rtol=1e-15)
    g = rf.leaf_mesh(component, component.graph_leaf(0.2), 24, z_cap=3.0)
    assert g.vertices[:, 2].max() <= 3.0 + 1e-9
    m = rf.component_mesh(component, 16)
    assert m.faces.min() >= 0 and m.faces.max() < len(m.vertices)
    t = rf.turb_mesh(rf.turb_model_surface(0.1), 16)
    assert np.all(np.isfinite(t.vertices))
    with pytest.raises(ValueError):
        rf.leaf_mesh(component, component.graph_leaf(0.0), 2)
