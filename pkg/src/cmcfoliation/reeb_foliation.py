"""Enlarged Reeb-type CMC foliation of ``D x (R / lambda Z)`` and the turbularization model.

Leaves are the vertical translates of the ``J = 0`` graph over ``[0, r1)``
(mean curvature ``H``) together with the vertical cylinders ``C(r)``,
``r in [r1, 1]`` (mean curvature ``(n-2)/(n-1) phi'/phi``, zero on ``[r2, 1]``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from . import profile_ode as po
from .mesh import Mesh, grid_faces, revolve
from .radial_metric import (DomainError, RadialProfile, build_profile, cylinder_H,
                            sphere_volume)
from .report import VerificationReport


@dataclass(frozen=True)
class Leaf:
    kind: str  # "graph" or "cylinder"
    param: float  # z0 for graphs, radius for cylinders
    H_leaf: float

    @property
    def z0(self) -> float:
        if self.kind != "graph":
            raise AttributeError("cylinder leaves have no z0")
        return self.param

    @property
    def radius(self) -> float:
        if self.kind != "cylinder":
            raise AttributeError("graph leaves have no radius")
        return self.param


@dataclass(eq=False)
class EnlargedReebComponent:
    profile: RadialProfile
    H: float
    lam: float
    graph: po.Trajectory
    _cap_spline: CubicSpline = field(repr=False)
    _z_r0: float = 0.0
    checks: VerificationReport = field(default_factory=VerificationReport)

    # -- geometry ---------------------------------------------------------
    def z_graph(self, r):
        """Height of the base graph leaf (through the origin) over radius ``r < r1``."""
        r = np.asarray(r, dtype=float)
        p = self.profile
        if np.any(r < 0.0) or np.any(r >= p.r1):
            raise DomainError("graph defined on [0, r1)")
        v = p.r1 - np.maximum(r, p.r0)
        outer = self._z_r0 + po._graph_G(p.r1 - p.r0) - po._graph_G(v)
        out = np.where(r <= p.r0, self._cap_spline(np.minimum(r, p.r0)), outer)
        return float(out) if out.ndim == 0 else out

    def graph_leaf(self, z0: float = 0.0) -> Leaf:
        return Leaf("graph", float(z0) % self.lam, self.H)

    def cylinder_leaf(self, r: float) -> Leaf:
        if not self.profile.r1 <= r <= 1.0:
            raise DomainError("cylinder leaves have r in [r1, 1]")
        return Leaf("cylinder", float(r), float(cylinder_H(r, self.profile)))

    def leaf_at_point(self, p) -> Leaf:
        """Leaf through ``p = (r, theta, z)``."""
        r, _, z = p
        if not 0.0 <= r <= 1.0:
            raise DomainError("r must lie in [0, 1]")
        if r >= self.profile.r1:
            return self.cylinder_leaf(r)
        return self.graph_leaf(z - self.z_graph(r))

    def contains(self, leaf: Leaf, p, tol: float = 1e-9) -> bool:
        r, _, z = p
        if leaf.kind == "cylinder":
            return abs(r - leaf.radius) <= tol
        if r >= self.profile.r1:
            return False
        d = (z - leaf.z0 - self.z_graph(r)) % self.lam
        return min(d, self.lam - d) <= tol

    # -- curvature --------------------------------------------------------
    def leaf_mean_curvature(self, leaf: Leaf, num: int = 400, r_min: float = 1e-3,
                            tail: float = 1e-4, step: float = 1e-4) -> dict:
        """Pointwise ``((n-2) (phi'/phi) sin(sigma) + kappa) / (n-1)`` along ``leaf``.

        ``kappa = d sigma / ds`` is differentiated numerically from the
        reconstructed ``sigma(r)`` of the graph (five-point stencil in ``r``).
        """
        p = self.profile
        k, m = p.n - 2, p.n - 1
        if leaf.kind == "cylinder":
            r = np.atleast_1d(leaf.radius)
            phi, dphi, _ = p.eval(r)
            vals = k / m * dphi / phi
        else:
            r = np.concatenate([np.linspace(r_min, p.r0, num // 2, endpoint=False),
                                p.r1 - np.geomspace(p.r1 - p.r0, tail, num - num // 2)])
            h = np.minimum(step, np.minimum(r, p.r1 - r) / 4.0)
            f = [po.graph_sigma(r + j * h, p, self.H) for j in (-2, -1, 1, 2)]
            dsig_dr = (f[0] - 8.0 * f[1] + 8.0 * f[2] - f[3]) / (12.0 * h)
            sig = po.graph_sigma(r, p, self.H)
            kappa = np.cos(sig) * dsig_dr
            phi, dphi, _ = p.eval(r)
            vals = (k * dphi / phi * np.sin(sig) + kappa) / m
        return {"r": r, "H": vals, "min": float(vals.min()), "max": float(vals.max()),
                "mean": float(vals.mean())}

    def mean_curvature_profile(self, r):
        """Leaf mean curvature as a function of the radius where the leaf is met at ``r``."""
        r = np.asarray(r, dtype=float)
        p = self.profile
        rr = np.clip(r, p.r1, 1.0)
        return np.where(r < p.r1, self.H, cylinder_H(rr, p))

    # -- volumes ----------------------------------------------------------
    def cylinder_volume(self, delta: float, lam: float | None = None) -> float:
        return cylinder_volume(delta, self.profile, self.lam if lam is None else lam)


def cylinder_volume(delta: float, profile: RadialProfile, lam: float) -> float:
    """``lam * phi(delta)^(n-2) * Vol(S^(n-2))``; independent of ``delta`` on ``[r2, 1]``."""
    if not 0.0 < delta <= 1.0:
        raise DomainError("delta must lie in (0, 1]")
    return lam * profile.phi(delta) ** profile.k * sphere_volume(profile.k)


def choose_lambda(target_volume: float, profile: RadialProfile) -> float:
    if not target_volume > 0.0:
        raise DomainError("target volume must be positive")
    return target_volume / (profile.phi(profile.r2) ** profile.k * sphere_volume(profile.k))


def build_enlarged_reeb(n: int = 3, H: float = 1.0, r0: float = 0.25, r1: float = 0.5,
                        r2: float = 0.75, lam: float = 1.0,
                        profile: RadialProfile | None = None,
                        verify: bool = True, seed: int = 0) -> EnlargedReebComponent:
    """Assemble the component and run its verification suite."""
    if not lam > 0.0:
        raise DomainError("lambda must be positive")
    if profile is None:
        profile = build_profile(n, H, r0, r1, r2)
    cap = po.graph_integrate(profile, profile.H, r_stop=profile.r0, num=801)
    comp = EnlargedReebComponent(profile, profile.H, float(lam), cap,
                                 CubicSpline(cap.r, cap.z), float(cap.z[-1]))
    if verify:
        comp.checks = verify_component(comp, seed=seed)
    return comp


def verify_component(comp: EnlargedReebComponent, seed: int = 0,
                     n_points: int = 10_000) -> VerificationReport:
    """(E1)/(E2) and partition checks."""
    rep = VerificationReport()
    p = comp.profile
    rng = np.random.default_rng(seed)

    # (E1): graph leaf, monotone, asymptotic to C(r1), CMC
    rr = p.r1 - np.geomspace(p.r1, 1e-6, 400)
    z = comp.z_graph(rr)
    rep.flag("graph_z_strictly_increasing", bool(np.all(np.diff(z) > 0.0)), "PAPER")
    rep.flag("graph_z_unbounded", comp.z_graph(p.r1 - 1e-6) > comp.z_graph(p.r1 - 1e-3),
             "PAPER")
    mc = comp.leaf_mean_curvature(comp.graph_leaf(0.0))
    rep.bound("graph_H_oscillation", mc["max"] - mc["min"], 1e-6, "DERIVED")
    rep.add("graph_H_mean", mc["mean"], comp.H, 1e-6, "DERIVED")
    q = p.h_ratio(np.linspace(0.0, p.r1, 10_001)[:-1])
    rep.flag("h_ratio_below_one", bool(np.all((q >= 0.0) & (q < 1.0))), "PAPER")

    # (E2): cylinders
    rep.add("cylinder_H_at_r1", cylinder_H(p.r1, p), comp.H, 1e-9, "PAPER")
    flat = np.linspace(p.r2, 1.0, 101)
    rep.bound("cylinder_H_flat_max", np.max(np.abs(cylinder_H(flat, p))), 1e-12, "PAPER")
    rad = np.linspace(p.r1, 1.0, 2001)
    Hc = cylinder_H(rad, p)
    rep.bound("cylinder_H_max_jump", np.max(np.abs(np.diff(Hc))), 1e-2, "DERIVED")
    for rc in (p.r1, 0.5 * (p.r1 + p.r2), p.r2, 1.0):
        c = comp.leaf_mean_curvature(comp.cylinder_leaf(rc))
        rep.add(f"cylinder_leaf_H_r{rc:.4f}", c["mean"], cylinder_H(rc, p), 1e-12,
                "PAPER")

    # partition on random points
    r = rng.uniform(0.0, 1.0, n_points)
    th = rng.uniform(0.0, 2 * math.pi, n_points)
    zz = rng.uniform(-2.0 * comp.lam, 2.0 * comp.lam, n_points)
    bad = 0
    for ri, ti, zi in zip(r, th, zz):
        pt = (ri, ti, zi)
        leaf = comp.leaf_at_point(pt)
        hits = int(comp.contains(leaf, pt))
        if leaf.kind == "graph":
            shift = rng.uniform(1e-3, comp.lam - 1e-3)
            hits += int(comp.contains(comp.graph_leaf(leaf.z0 + shift), pt))
        else:
            other = comp.graph_leaf(0.0)
            hits += int(comp.contains(other, pt))
            if ri > p.r1 + 1e-3:
                hits += int(comp.contains(comp.cylinder_leaf(ri - 1e-3), pt))
        bad += hits != 1
        # quotient: shifting by lambda lands on the same leaf
        l2 = comp.leaf_at_point((ri, ti, zi + comp.lam))
        if l2.kind != leaf.kind or abs(l2.param - leaf.param) > 1e-9 and \
                abs(abs(l2.param - leaf.param) - comp.lam) > 1e-9:
            bad += 1
    rep.add("partition_violations", bad, 0.0, 0.0, "DERIVED")

    # volumes
    deltas = np.linspace(p.r2, 1.0, 11)
    vols = np.array([comp.cylinder_volume(d) for d in deltas])
    rep.add("volume_delta_independence", vols.max(), vols.min(), 1e-12, "PAPER",
            relative=True)
    return rep


# ---------------------------------------------------------------------------
# turbularization model
# ---------------------------------------------------------------------------

def _flat(t):
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0.0
    out[pos] = np.exp(-1.0 / t[pos])
    return out


def smooth_cutoff(x, a: float, b: float):
    """C-infinity function equal to 1 for ``x <= a`` and 0 for ``x >= b``."""
    x = np.asarray(x, dtype=float)
    u = _flat(b - x)
    v = _flat(x - a)
    return u / (u + v)


@dataclass(frozen=True)
class TurbModelSurface:
    """Graph ``t = T(rho)`` over the annulus ``4 eps < rho <= 8 eps`` in ``D(8 eps) x S^1``.

    ``T = -sign * wrap_rate * (1/(rho - 4 eps) - 1/(2 eps)) * chi(rho)`` with a
    flat cutoff ``chi`` (1 below ``5 eps``, 0 above ``6 eps``).  The surface is
    invariant under rotations of the disk, coincides with the annulus ``t = 0``
    on ``[6 eps, 8 eps]`` and spirals onto the torus ``rho = 4 eps`` with
    ``T -> -sign * infinity``.  ``t`` is an unwrapped coordinate on the circle
    of length ``period``.
    """

    eps: float
    sign: int = 1
    wrap_rate: float = 1.0
    n: int = 3
    period: float = 1.0

    def __post_init__(self) -> None:
        if not self.eps > 0.0 or not self.wrap_rate > 0.0:
            raise DomainError("eps and wrap_rate must be positive")
        if self.sign not in (1, -1):
            raise DomainError("sign must be +1 or -1")

    def _check(self, rho):
        rho = np.asarray(rho, dtype=float)
        if np.any(rho <= 4.0 * self.eps) or np.any(rho > 8.0 * self.eps):
            raise DomainError("rho must lie in (4 eps, 8 eps]")
        return rho

    def T(self, rho):
        rho = self._check(rho)
        e = self.eps
        base = 1.0 / (rho - 4.0 * e) - 1.0 / (2.0 * e)
        out = -self.sign * self.wrap_rate * base * smooth_cutoff(rho, 5.0 * e, 6.0 * e)
        out = np.where(rho >= 6.0 * e, 0.0, out)
        return float(out) if out.ndim == 0 else out

    def dT(self, rho, h: float | None = None):
        """Derivative of ``T`` by a centered difference (``h`` defaults to eps * 1e-6)."""
        rho = self._check(rho)
        h = self.eps * 1e-6 if h is None else h
        lo = np.maximum(rho - h, 4.0 * self.eps + 0.5 * (rho - 4.0 * self.eps))
        hi = np.minimum(rho + h, 8.0 * self.eps)
        return (self.T(hi) - self.T(lo)) / (hi - lo)

    def point(self, rho, direction):
        """Point ``(x, t)`` with ``x = rho * direction`` (unit vector in R^(n-1))."""
        d = np.asarray(direction, dtype=float)
        d = d / np.linalg.norm(d)
        return np.append(float(rho) * d, self.T(rho))

    def contains(self, x, tol: float = 1e-9) -> bool:
        """Whether ``(x, t)`` lies on the surface (``t`` compared modulo ``period``)."""
        x = np.asarray(x, dtype=float)
        rho = float(np.linalg.norm(x[:-1]))
        if not 4.0 * self.eps < rho <= 8.0 * self.eps * (1 + 1e-12):
            return False
        rho = min(rho, 8.0 * self.eps)
        d = (x[-1] - self.T(rho)) % self.period
        # rho is recomputed from x; allow for its rounding error times |T'|
        slack = abs(float(self.dT(rho))) * rho * 1e-14
        return min(d, self.period - d) <= tol + slack

    def normal(self, rho):
        """Unit normal ``(-T', 1)/sqrt(1 + T'^2)`` in the (rho, t) plane."""
        d = self.dT(rho)
        nrm = np.sqrt(1.0 + d * d)
        return np.stack([-d / nrm, 1.0 / nrm], axis=-1)

    def distance_to_core_boundary(self, rho):
        """Flat distance to the torus ``rho = 4 eps``."""
        return np.asarray(self._check(rho)) - 4.0 * self.eps

    def samples(self, n_rho: int = 64, n_theta: int = 64, gap: float | None = None):
        gap = self.eps * 1e-3 if gap is None else gap
        rho = 4.0 * self.eps + np.geomspace(gap, 4.0 * self.eps, n_rho)
        th = 2.0 * np.pi * np.arange(n_theta) / n_theta
        return rho, th


def turb_model_surface(eps: float, sign: int = 1, wrap_rate: float = 1.0,
                       n: int = 3) -> TurbModelSurface:
    return TurbModelSurface(float(eps), int(sign), float(wrap_rate), int(n))


def verify_turb(surf: TurbModelSurface, seed: int = 0) -> VerificationReport:
    """Property suite for the model surface."""
    rep = VerificationReport()
    e = surf.eps
    rng = np.random.default_rng(seed)
    flat = np.linspace(6.0 * e, 8.0 * e, 201)
    rep.add("flat_on_outer_annulus", np.max(np.abs(surf.T(flat))), 0.0, 0.0, "PAPER")
    rho = 4.0 * e + np.geomspace(1e-9 * e, 4.0 * e, 2000)
    Tv = surf.T(rho)
    dT = np.diff(Tv) * surf.sign
    rep.flag("monotone", bool(np.all(dT >= 0.0)), "PAPER")
    rep.flag("diverges_at_core", bool(-surf.sign * Tv[0] > 1e6), "PAPER")
    rep.flag("finite_single_valued", bool(np.all(np.isfinite(Tv))), "PAPER")
    gaps = np.array([1e-1, 1e-2, 1e-3, 1e-4]) * e
    dist = surf.distance_to_core_boundary(4.0 * e + gaps)
    rep.flag("distance_decreasing", bool(np.all(np.diff(dist) < 0.0)), "PAPER")
    # the leaf approaches the core boundary: distance below 1e-8 eps once T is huge
    near = 4.0 * e * (1.0 + 1e-9)
    rep.bound("distance_limit", float(surf.distance_to_core_boundary(near)), 1e-8 * e,
              "PAPER")
    nr = surf.normal(4.0 * e + 1e-6 * e)
    rep.add("normal_limit_rho_component", nr[0], -surf.sign, 1e-6, "PAPER")
    # rotation invariance
    from scipy.stats import special_ortho_group

    bad = 0
    dim = surf.n - 1
    for _ in range(200):
        r = rng.uniform(4.0 * e * (1 + 1e-6), 8.0 * e)
        d = rng.normal(size=dim)
        x = surf.point(r, d)
        A = special_ortho_group.rvs(dim, random_state=rng) if dim > 1 else np.eye(1)
        y = np.append(A @ x[:-1], x[-1])
        bad += not surf.contains(y)
    rep.add("rotation_invariance_violations", bad, 0.0, 0.0, "PAPER")
    return rep


# ---------------------------------------------------------------------------
# meshes
# ---------------------------------------------------------------------------

def leaf_mesh(comp: EnlargedReebComponent, leaf: Leaf, resolution: int = 64,
              z_cap: float | None = None, z_range=(0.0, 1.0)) -> Mesh:
    """3-D section ``(r cos theta, r sin theta, z)`` of a leaf."""
    if resolution < 4:
        raise ValueError("resolution must be at least 4")
    p = comp.profile
    if leaf.kind == "cylinder":
        z = np.linspace(z_range[0], z_range[1], resolution)
        return revolve(np.full(resolution, leaf.radius), z, resolution)
    r_stop = p.r1 - 1e-4
    if z_cap is not None:
        # largest radius with z_graph <= z_cap - z0
        lo, hi = 0.0, r_stop
        target = z_cap - leaf.z0
        if comp.z_graph(hi) > target:
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if comp.z_graph(mid) > target:
                    hi = mid
                else:
                    lo = mid
            r_stop = lo
    r = r_stop * (np.arange(resolution) / (resolution - 1))
    r[-1] = r_stop
    return revolve(r, leaf.z0 + comp.z_graph(r), resolution)


def turb_mesh(surf: TurbModelSurface, resolution: int = 64) -> Mesh:
    """Section of the model surface in the 3-D model (n = 3), ``t`` unwrapped."""
    rho, th = surf.samples(resolution, resolution)
    t = surf.T(rho)
    R = rho[:, None]
    V = np.stack([R * np.cos(th)[None, :], R * np.sin(th)[None, :],
                  np.broadcast_to(t[:, None], (len(rho), len(th)))], axis=-1)
    return Mesh(V.reshape(-1, 3), grid_faces(len(rho), len(th), True))


def component_mesh(comp: EnlargedReebComponent, resolution: int = 32,
                   n_graph: int = 3, n_cyl: int = 3) -> Mesh:
    """A few graph translates (capped at ``z(r1 - 1e-4)``) and cylinders."""
    zc = comp.z_graph(comp.profile.r1 - 1e-4)
    mesh = None
    for i in range(n_graph):
        m = leaf_mesh(comp, comp.graph_leaf(i * comp.lam / n_graph), resolution)
        mesh = m if mesh is None else mesh.merged(m)
    for rc in np.linspace(comp.profile.r1, 1.0, n_cyl):
        mesh = mesh.merged(leaf_mesh(comp, comp.cylinder_leaf(rc), resolution,
                                     z_range=(0.0, zc)))
    return mesh
