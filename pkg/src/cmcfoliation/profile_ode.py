"""Profile curves of rotationally invariant CMC hypersurfaces.

A hypersurface invariant under ``SO(n-1)`` in ``(D, dr^2 + phi^2 dtheta^2) x R``
is generated by an arclength-parametrised curve ``(r(s), z(s))`` with turning
angle ``sigma``.  Constant mean curvature ``H`` means

    r' = cos(sigma),  z' = sin(sigma),
    sigma' = (n-1) H - (n-2) (phi'/phi) sin(sigma),

and ``J = phi^(n-2) sin(sigma) - h(r)`` is conserved.  The ``J = 0`` solution
leaving the axis is a graph ``z(r)`` over ``[0, r1)``.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from . import kernels
from .radial_metric import DomainError, RadialProfile, sphere_volume

TRAJECTORY_HEADER = ["s", "r", "z", "sigma", "J"]
AXIS_EPS = 1e-6


class SingularAxisError(DomainError):
    """The profile-curve system is singular on the axis ``r = 0``."""


class PreconditionError(ValueError):
    pass


class BlowUpError(DomainError):
    """``h / phi^(n-2)`` reached 1; the graph slope is infinite."""


@dataclass(frozen=True)
class ProfileState:
    s: float
    r: float
    z: float
    sigma: float


@dataclass(frozen=True)
class StopRule:
    """Termination conditions; the earliest hit wins.

    ``vertical`` stops where ``cos(sigma)`` changes sign (a vertical tangent).
    """

    max_s: float = 10.0
    r_below: float = AXIS_EPS
    r_above: float = 1.0
    z_above: float = math.inf
    vertical: bool = False


@dataclass(eq=False)
class Trajectory:
    s: np.ndarray
    r: np.ndarray
    z: np.ndarray
    sigma: np.ndarray
    J: np.ndarray
    profile: RadialProfile
    H: float
    stop_reason: str = "max_s"
    n_steps: int = 0
    meta: dict = field(default_factory=dict)

    @property
    def J0(self) -> float:
        return float(self.J[0])

    @property
    def max_J_drift(self) -> float:
        return float(np.max(np.abs(self.J - self.J[0])))

    def __len__(self) -> int:
        return len(self.s)

    def state(self, i: int) -> ProfileState:
        return ProfileState(float(self.s[i]), float(self.r[i]), float(self.z[i]),
                            float(self.sigma[i]))

    def states(self) -> list[ProfileState]:
        return [self.state(i) for i in range(len(self))]

    def summary(self) -> dict:
        return {
            "J0": self.J0,
            "max_J_drift": self.max_J_drift,
            "stop_reason": self.stop_reason,
            "n_steps": int(self.n_steps),
        }

    def summary_json(self) -> str:
        return json.dumps(self.summary(), indent=2, sort_keys=True)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(TRAJECTORY_HEADER)
            for row in zip(self.s, self.r, self.z, self.sigma, self.J):
                w.writerow([repr(float(x)) for x in row])

    def shifted(self, dz: float) -> "Trajectory":
        return Trajectory(self.s.copy(), self.r.copy(), self.z + dz, self.sigma.copy(),
                          self.J.copy(), self.profile, self.H, self.stop_reason,
                          self.n_steps, dict(self.meta))


# ---------------------------------------------------------------------------
# pointwise quantities
# ---------------------------------------------------------------------------

def ode_rhs(state: ProfileState, profile: RadialProfile, H: float):
    """``(r', z', sigma')`` at ``state``."""
    if state.r <= 0.0:
        raise SingularAxisError("profile-curve system is singular at r = 0")
    phi, dphi, _ = profile.eval(state.r)
    sn = math.sin(state.sigma)
    k = profile.n - 2
    return math.cos(state.sigma), sn, (profile.n - 1) * H - k * (dphi / phi) * sn


def first_integral(state, profile: RadialProfile, H: float):
    """``J = phi^(n-2) sin(sigma) - (n-1) H int_0^r phi^(n-2)``.

    ``state`` may be a :class:`ProfileState` or an ``(r, sigma)`` pair of arrays.
    """
    if isinstance(state, ProfileState):
        r, sigma = state.r, state.sigma
    else:
        r, sigma = state
    phi = profile.phi(r)
    I = profile.phi_integral(r)
    return phi ** profile.k * np.sin(sigma) - (profile.n - 1) * H * I


def height_ratio(r, profile: RadialProfile, H: float):
    """``(n-1) H int_0^r phi^(n-2) / phi^(n-2)``, i.e. ``sin(sigma)`` on the J = 0 branch."""
    return profile.h_ratio(r) * (H / profile.H)


def graph_slope(r, profile: RadialProfile, H: float):
    """``dz/dr = q / sqrt(1 - q^2)`` with ``q = h / phi^(n-2)``."""
    r = np.asarray(r, dtype=float)
    if np.any(r < 0.0) or np.any(r >= 1.0):
        raise DomainError("r must lie in [0, 1)")
    q = np.asarray(height_ratio(r, profile, H))
    if np.any(q >= 1.0):
        raise BlowUpError("h / phi^(n-2) >= 1: graph slope is infinite")
    out = q / np.sqrt(1.0 - q * q)
    return float(out) if out.ndim == 0 else out


# ---------------------------------------------------------------------------
# integration
# ---------------------------------------------------------------------------

def integrate(start: ProfileState, profile: RadialProfile, H: float,
              stop: StopRule | None = None, rtol: float = 1e-10,
              atol: float = 1e-12, max_steps: int = 1_000_000) -> Trajectory:
    """Adaptive Dormand-Prince 5(4) integration from ``start``.

    Height is integrated relative to ``start.z`` so vertical translates are
    reproduced exactly.  Stops, by priority: axis (``r_below``), ``r_above``,
    ``z_above``, vertical tangent, ``max_s``.
    """
    if stop is None:
        stop = StopRule()
    if not 0.0 < start.r <= 1.0:
        raise SingularAxisError("start radius must lie in (0, 1]")
    r_above = stop.r_above
    if start.r >= r_above:
        r_above = math.inf
    s, r, zeta, sigma, J, code = kernels.integrate_profile(
        *profile.kernel_args(), float(H), float(start.r), float(start.sigma),
        float(stop.max_s), float(stop.r_below), float(r_above),
        float(stop.z_above - start.z), bool(stop.vertical), float(rtol), float(atol),
        int(max_steps))
    return Trajectory(s + start.s, r, zeta + start.z, sigma, J, profile, float(H),
                      kernels.STOP_NAMES[code], len(s) - 1)


def _cumulative_quad(fun, grid: np.ndarray, points=()) -> np.ndarray:
    out = np.zeros(len(grid))
    acc = 0.0
    for i in range(1, len(grid)):
        a, b = grid[i - 1], grid[i]
        brk = [p for p in points if a < p < b]
        val, _ = quad(fun, a, b, epsabs=1e-13, epsrel=1e-13, limit=200,
                      points=brk or None)
        acc += val
        out[i] = acc
    return out


def _graph_G(v):
    w = np.sqrt(1.0 - v * v)
    return w - np.log((1.0 + w) / v)


def graph_integrate(profile: RadialProfile, H: float | None = None,
                    r_stop: float | None = None, num: int = 401,
                    r_start: float = 0.0) -> Trajectory:
    """The ``J = 0`` graph ``z(r)`` leaving the axis at height 0.

    Samples ``num`` radii in ``[r_start, r_stop]``, clustered towards ``r_stop``
    when it is close to ``r1``.  ``z`` and arclength come from adaptive
    quadrature; on the closed-form piece (``H`` equal to the profile's ``H``)
    the exact antiderivatives are used.  ``sigma = asin(h / phi^(n-2))``.
    """
    if H is None:
        H = profile.H
    r1 = profile.r1
    if r_stop is None:
        r_stop = r1 - 1e-4
    if not r_start < r_stop < r1:
        raise PreconditionError("need r_start < r_stop < r1")
    exact = H == profile.H
    r0 = profile.r0
    # grid: uniform in r on the cap, logarithmic in (r1 - r) beyond
    split = min(r0, r_stop)
    n_cap = max(2, num // 3) if split > r_start else 0
    parts = []
    if n_cap:
        parts.append(np.linspace(r_start, split, n_cap))
    if r_stop > split:
        v = np.geomspace(r1 - split, r1 - r_stop, num - n_cap + (1 if n_cap else 0))
        parts.append((r1 - v)[1:] if n_cap else r1 - v)
    r = np.concatenate(parts)
    r[-1] = r_stop
    q = np.asarray(height_ratio(r, profile, H))
    if np.any(q >= 1.0):
        raise BlowUpError("h / phi^(n-2) >= 1 before r_stop")
    sigma = np.arcsin(q)

    def slope(x):
        return graph_slope(x, profile, H)

    def dsdr(x):
        qq = height_ratio(x, profile, H)
        return 1.0 / math.sqrt(1.0 - qq * qq)

    z = np.empty_like(r)
    s = np.empty_like(r)
    inner = r <= r0 if exact else np.ones_like(r, dtype=bool)
    ri = r[inner]
    z[inner] = _cumulative_quad(slope, ri, points=(r0, r1, profile.r2))
    s[inner] = _cumulative_quad(dsdr, ri, points=(r0, r1, profile.r2))
    if exact and np.any(~inner):
        zr0, sr0 = z[inner][-1], s[inner][-1]
        if ri[-1] < r0:
            zr0 += quad(slope, ri[-1], r0, epsabs=1e-13, epsrel=1e-13)[0]
            sr0 += quad(dsdr, ri[-1], r0, epsabs=1e-13, epsrel=1e-13)[0]
        ro = r[~inner]
        z[~inner] = zr0 + _graph_G(r1 - r0) - _graph_G(r1 - ro)
        s[~inner] = sr0 + np.log((r1 - r0) / (r1 - ro))
    J = first_integral((r, sigma), profile, H)
    return Trajectory(s, r, z, sigma, np.asarray(J), profile, float(H),
                      "r_stop", len(r) - 1, {"kind": "graph"})


def graph_height(r, profile: RadialProfile, H: float | None = None):
    """``z(r)`` of the ``J = 0`` graph (scalar)."""
    if H is None:
        H = profile.H
    r = float(r)
    if r == 0.0:
        return 0.0
    tr = graph_integrate(profile, H, r_stop=r, num=8)
    return float(tr.z[-1])


def stitched_graph_leaf(profile: RadialProfile, H: float | None = None,
                        z_cap: float | None = None, max_s: float = 50.0) -> Trajectory:
    """The ``J = 0`` leaf: quadrature graph on ``[0, r0/2]`` then the ODE.

    The ODE part stops at ``z_cap`` (default ``z(r1 - 1e-4)``).
    """
    if H is None:
        H = profile.H
    r_join = 0.5 * profile.r0
    g = graph_integrate(profile, H, r_stop=r_join, num=101)
    if z_cap is None:
        z_cap = graph_height(profile.r1 - 1e-4, profile, H)
    start = g.state(len(g) - 1)
    ode = integrate(start, profile, H, StopRule(max_s=max_s, z_above=z_cap,
                                                r_above=1.0))
    tr = Trajectory(np.concatenate([g.s, ode.s[1:]]), np.concatenate([g.r, ode.r[1:]]),
                    np.concatenate([g.z, ode.z[1:]]),
                    np.concatenate([g.sigma, ode.sigma[1:]]),
                    np.concatenate([g.J, ode.J[1:]]), profile, float(H),
                    ode.stop_reason, ode.n_steps, {"kind": "graph", "join": len(g) - 1})
    return tr


# ---------------------------------------------------------------------------
# length, reflection, flux
# ---------------------------------------------------------------------------

def arc_length(profile: RadialProfile, a: float, b: float, H: float | None = None) -> float:
    """Length of the ``J = 0`` graph over ``[a, b] subset [0, r1)`` by quadrature."""
    if H is None:
        H = profile.H
    if a == b:
        return 0.0
    if not 0.0 <= a < b:
        raise DomainError("need 0 <= a <= b")
    if b >= profile.r1:
        raise BlowUpError("length diverges as b -> r1")

    def f(x):
        q = height_ratio(x, profile, H)
        return 1.0 / math.sqrt(1.0 - q * q)

    pts = [p for p in (profile.r0,) if a < p < b]
    val, _ = quad(f, a, b, epsabs=1e-13, epsrel=1e-12, limit=500, points=pts or None)
    return float(val)


def trajectory_length(tr: Trajectory) -> float:
    return float(tr.s[-1] - tr.s[0])


def mirror(tr: Trajectory, index: int = -1) -> Trajectory:
    """Reflect across the horizontal line through state ``index``.

    ``(s, r, z, sigma) -> (2 s0 - s, r, 2 z0 - z, 2 sigma0 - sigma)``; an involution.
    For ``sigma0 = +-pi/2`` this maps solutions to solutions.
    """
    s0, z0, g0 = tr.s[index], tr.z[index], tr.sigma[index]
    sig = 2.0 * g0 - tr.sigma
    out = Trajectory(2.0 * s0 - tr.s[::-1], tr.r[::-1].copy(), 2.0 * z0 - tr.z[::-1],
                     sig[::-1].copy(), np.empty(len(tr)), tr.profile, tr.H,
                     tr.stop_reason, tr.n_steps, dict(tr.meta))
    out.J = np.asarray(first_integral((out.r, out.sigma), tr.profile, tr.H))
    return out


def reflect_extend(tr: Trajectory, tol: float = 1e-8) -> Trajectory:
    """Append the mirror image across the horizontal line at the final state.

    Requires a vertical final tangent (``sigma = +-pi/2`` mod ``2 pi``).
    """
    g = tr.sigma[-1]
    if abs(math.cos(g)) > tol:
        raise PreconditionError("final tangent is not vertical")
    m = mirror(tr, -1)
    # m runs from the reflection of the end (== end) outward
    return Trajectory(np.concatenate([tr.s, m.s[1:]]), np.concatenate([tr.r, m.r[1:]]),
                      np.concatenate([tr.z, m.z[1:]]),
                      np.concatenate([tr.sigma, m.sigma[1:]]),
                      np.concatenate([tr.J, m.J[1:]]), tr.profile, tr.H,
                      tr.stop_reason, tr.n_steps, dict(tr.meta, reflected_at=len(tr) - 1))


def ode_residual(tr: Trajectory, skip: int = 2) -> dict:
    """Residuals of the ODE along a sampled trajectory.

    Derivatives come from a cubic spline in ``s``; ``skip`` end samples are
    dropped on each side.  Returns max absolute residuals of ``r'``, ``z'``,
    ``sigma'`` and the unit-speed defect.
    """
    s = tr.s
    if np.any(np.diff(s) <= 0.0):
        raise PreconditionError("s must be strictly increasing")
    sl = slice(skip, len(s) - skip)
    dr = CubicSpline(s, tr.r)(s, 1)[sl]
    dz = CubicSpline(s, tr.z)(s, 1)[sl]
    dg = CubicSpline(s, tr.sigma)(s, 1)[sl]
    r = tr.r[sl]
    sig = tr.sigma[sl]
    phi, dphi, _ = tr.profile.eval(r)
    rhs = (tr.profile.n - 1) * tr.H - tr.profile.k * (dphi / phi) * np.sin(sig)
    return {
        "r": float(np.max(np.abs(dr - np.cos(sig)))),
        "z": float(np.max(np.abs(dz - np.sin(sig)))),
        "sigma": float(np.max(np.abs(dg - rhs))),
        "unit_speed": float(np.max(np.abs(np.cos(sig) ** 2 + np.sin(sig) ** 2 - 1.0))),
    }


def graph_sigma(r, profile: RadialProfile, H: float | None = None):
    """Turning angle ``asin(h / phi^(n-2))`` of the ``J = 0`` graph."""
    if H is None:
        H = profile.H
    return np.arcsin(height_ratio(r, profile, H))


def graph_residual(tr: Trajectory, step: float = 1e-4) -> dict:
    """ODE residuals of a graph trajectory from ``graph_integrate``.

    ``sigma'`` is obtained as ``cos(sigma) d sigma/dr`` with a five-point
    stencil in ``r`` applied to the reconstructed ``sigma(r)``; ``r'`` and
    ``z'`` come from cubic splines of the samples in ``s``.
    """
    prof, H = tr.profile, tr.H
    r = tr.r[1:]
    h = np.minimum(step, np.minimum(r, prof.r1 - r) / 4.0)
    f = [graph_sigma(r + j * h, prof, H) for j in (-2, -1, 1, 2)]
    dsig_dr = (f[0] - 8.0 * f[1] + 8.0 * f[2] - f[3]) / (12.0 * h)
    sig = tr.sigma[1:]
    phi, dphi, _ = prof.eval(r)
    rhs = (prof.n - 1) * H - prof.k * (dphi / phi) * np.sin(sig)
    out = ode_residual(tr)
    out["sigma"] = float(np.max(np.abs(np.cos(sig) * dsig_dr - rhs)))
    return out


def flux_revolution(state: ProfileState, profile: RadialProfile, H: float) -> float:
    """Scalar flux of the revolution hypersurface through the orbit of ``state``.

    ``int_gamma <d_z, eta> + (n-1) H int_D <d_z, N_D>`` with the conormal ``eta``
    and ``N_D = -d_z`` on the horizontal disk ``D`` bounded by the orbit.  The
    disk term is evaluated by adaptive quadrature in ``r``.
    """
    k = profile.k
    r = state.r
    vol = sphere_volume(k)
    phi_r = profile.phi(r) if r > 0.0 else 0.0
    orbit = vol * phi_r ** k * math.sin(state.sigma)
    if r > 0.0:
        pts = [p for p in profile.segments()[1:-1] if 0.0 < p < r]
        disk, _ = quad(lambda u: profile.phi(u) ** k, 0.0, r, epsabs=1e-14,
                       epsrel=1e-13, limit=200, points=pts or None)
    else:
        disk = 0.0
    return orbit - (profile.n - 1) * H * vol * disk
