"""Acceptance criteria 1-11.

Each test records one ``PASS``/``FAIL`` line; the lines are printed in the
pytest terminal summary (see ``conftest.py``) and by ``python tests/test_acceptance.py``.
"""
import json
import math
import time

import numpy as np
import pytest

from cmcfoliation import cli
from cmcfoliation import profile_ode as po
from cmcfoliation import radial_metric as rm
from cmcfoliation import reeb_foliation as rf
from cmcfoliation import torus2d as t2

RESULTS: dict[int, str] = {}


def record(num: int, title: str, ok: bool, detail: str) -> None:
    RESULTS[num] = f"[{'PASS' if ok else 'FAIL'}] criterion {num:2d}: {title} ({detail})"
    assert ok, RESULTS[num]


@pytest.fixture(scope="module")
def prof():
    return rm.build_profile()


def test_c01_first_integral(prof):
    rng = np.random.default_rng(2024)
    t0 = time.perf_counter()
    worst = 0.0
    for _ in range(50):
        r = rng.uniform(0.02, 0.98)
        sigma = rng.uniform(-math.pi, math.pi)
        H = rng.uniform(0.2, 3.0)
        tr = po.integrate(po.ProfileState(0.0, r, 0.0, sigma), prof, H, po.StopRule(max_s=20.0))
        worst = max(worst, tr.max_J_drift / (1.0 + abs(tr.J0)))
    dt = time.perf_counter() - t0
    record(1, "first-integral conservation", worst < 1e-8 and dt < 10.0,
           f"max relative drift {worst:.2e} < 1e-8, runtime {dt:.2f} s < 10 s")


def test_c02_cylinder_mean_curvature(prof):
    err = abs(rm.cylinder_H(prof.r1, prof) - prof.H)
    flat = float(np.max(np.abs(rm.cylinder_H(np.linspace(prof.r2, 1.0, 1001), prof))))
    record(2, "cylinder mean curvature", err <= 1e-9 and flat == 0.0,
           f"|cylinder_H(r1) - H| = {err:.1e} <= 1e-9, max |cylinder_H| on [r2,1] = {flat}")


def test_c03_length_law(prof):
    rng = np.random.default_rng(3)
    worst = 0.0
    r1 = prof.r1
    for _ in range(20):
        a, b = np.sort(rng.uniform(prof.r0, r1 - 1e-4, 2))
        worst = max(worst, abs(po.arc_length(prof, a, b) - math.log((r1 - a) / (r1 - b))))
    spot = abs(po.arc_length(prof, 0.3, 0.45) - math.log(4.0))
    record(3, "length law", worst < 1e-6 and spot < 1e-6,
           f"max error over 20 pairs {worst:.1e}, ln 4 spot error {spot:.1e}, tol 1e-6")


def test_c04_limit_behaviour(prof):
    q = prof.h_ratio(1e-5)
    slope = (prof.h_ratio(1e-4) - prof.h_ratio(0.0)) / 1e-4
    ok = q < 1e-3 and abs(slope - prof.H) < 1e-3
    record(4, "limit behaviour at the axis", ok,
           f"h/phi^(n-2)(1e-5) = {q:.2e} < 1e-3, slope at 1e-4 = {slope:.6f} (H = {prof.H})")


def test_c05_graph_ode_equivalence(prof):
    tr = po.graph_integrate(prof, num=2001)
    res = po.graph_residual(tr)
    resid = max(res["r"], res["z"], res["sigma"])
    J = float(np.max(np.abs(tr.J)))
    inc = bool(np.all(np.diff(tr.z) > 0.0))
    unb = po.graph_height(prof.r1 - 1e-6, prof) > po.graph_height(prof.r1 - 1e-3, prof)
    record(5, "graph/ODE equivalence", resid < 1e-6 and J < 1e-8 and inc and unb,
           f"residual {resid:.1e} < 1e-6, max |J| {J:.1e} < 1e-8, increasing {inc}, "
           f"z(r1-1e-6) > z(r1-1e-3) {unb}")


def test_c06_leafwise_cmc(prof):
    comp = rf.build_enlarged_reeb(profile=prof, lam=1.0, verify=False)
    spread = 0.0
    for z0 in np.linspace(0.0, 1.0, 5, endpoint=False):
        mc = comp.leaf_mean_curvature(comp.graph_leaf(z0))
        spread = max(spread, mc["max"] - mc["min"], abs(mc["mean"] - prof.H))
    for r in np.linspace(prof.r1, 1.0, 9):
        leaf = comp.cylinder_leaf(r)
        mc = comp.leaf_mean_curvature(leaf)
        spread = max(spread, abs(mc["mean"] - leaf.H_leaf))
    rr = np.linspace(0.0, 1.0, 20_001)
    Hr = comp.mean_curvature_profile(rr)
    jump = float(np.max(np.abs(np.diff(Hr))))
    at_r1 = abs(comp.mean_curvature_profile(prof.r1) - prof.H)
    outer = float(np.max(np.abs(comp.mean_curvature_profile(np.linspace(prof.r2, 1, 101)))))
    ok = spread < 1e-6 and jump < 1e-2 and at_r1 < 1e-9 and outer == 0.0
    record(6, "leafwise CMC of the enlarged Reeb component", ok,
           f"max leaf deviation {spread:.1e} < 1e-6, max profile step {jump:.1e} on a "
           f"5e-5 grid, |H(r1) - H| {at_r1:.0e}, max |H| on [r2,1] {outer}")


def test_c07_volume_prescription(prof):
    vols = np.array([rf.cylinder_volume(d, prof, 1.7) for d in np.linspace(prof.r2, 1, 101)])
    spread = float(np.ptp(vols) / vols.max())
    worst = 0.0
    for target in (0.1, 1.0, 10.0, 250.0):
        lam = rf.choose_lambda(target, prof)
        worst = max(worst, abs(rf.cylinder_volume(0.9, prof, lam) - target) / target)
    record(7, "volume prescription", spread <= 1e-12 and worst <= 1e-10,
           f"relative spread over delta {spread:.1e} <= 1e-12, round-trip {worst:.1e} <= 1e-10")


def test_c08_turbularization():
    names, fails = 0, []
    for n in (3, 4, 5):
        for sign in (1, -1):
            for eps in (0.02, 0.1):
                rep = rf.verify_turb(rf.turb_model_surface(eps, sign=sign, n=n), seed=8)
                names += len(rep.checks)
                fails += [f"n={n},sign={sign},eps={eps}:{c.name}" for c in rep.failures()]
    record(8, "turbularization model property suite", not fails,
           f"{names} checks over 12 surfaces, failures: {fails or 'none'}")


def test_c09_torus2d():
    t0 = time.perf_counter()
    errs = {}
    final = None
    for nx in (128, 256, 512):
        model = t2.build_model(Nx=nx)
        errs[nx] = t2.max_kappa_error(t2.sample_leaves(model, np.random.default_rng(0)))
        final = model
    rep = t2.verify_model(final, seed=0)
    dt = time.perf_counter() - t0
    mono = errs[128] > errs[256] > errs[512]
    det = rep["det_g_minus_1"]
    sym = all(rep[f"omega_symmetry_R{k}"].value == 0.0 for k in range(4)) and \
        all(rep[f"f_symmetry_R{k}"].value == 0.0 for k in range(4))
    integ = rep["integral_f_dV"].value
    ok = errs[512] < 5e-2 and mono and det.passed and sym and integ == 0.0 and dt < 60.0
    record(9, "torus2d pipeline", ok,
           f"max|kappa+f| {errs[128]:.2e} > {errs[256]:.2e} > {errs[512]:.2e} (< 5e-2), "
           f"det g - 1 {det.value:.1e}, symmetries exact {sym}, int f dV = {integ}, "
           f"runtime {dt:.1f} s < 60 s")


def test_c10_ricci_existence(prof):
    r = np.linspace(0.0, 1.0, 100_001)[1:]
    ric = rm.ricci_normal(r, prof)
    i = int(np.argmin(ric))
    bound = -(prof.n - 1) * prof.H ** 2
    record(10, "Ricci existence", bool(ric[i] <= bound),
           f"min Ric(d_r, d_r) = {ric[i]:.1f} at r = {r[i]:.4f} <= {bound}")


def test_c11_determinism(tmp_path, capsys):
    commands = [
        ["profile"],
        ["reeb", "--target-volume", "10", "--leaf", "cylinder:0.8"],
        ["torus2d"],
        ["export", "--object", "component"],
        ["export", "--object", "trajectory"],
        ["export", "--object", "turb"],
    ]
    same = []
    for i, argv in enumerate(commands):
        outs = []
        for rep in ("a", "b"):
            d = tmp_path / f"{i}{rep}"
            code = cli.main(argv + ["--seed", "11", "--out", str(d)])
            stdout = capsys.readouterr().out
            files = {p.name: p.read_bytes() for p in sorted(d.iterdir())}
            v = cli.main(["verify", str(d)])
            vout = capsys.readouterr().out
            outs.append((code, stdout, files, v, vout))
        same.append(outs[0] == outs[1] and outs[0][0] == 0 and outs[0][3] == 0)
    record(11, "CLI determinism", all(same),
           f"{sum(same)}/{len(commands)} subcommand runs byte-identical with passing verify")


if __name__ == "__main__":
    import sys

    sys.exit(pytest.main([__file__, "-q", "-p", "no:cacheprovider"]))
