"""Rotationally symmetric metrics ``dr^2 + phi(r)^2 dtheta^2`` on the unit disk.

The profile ``phi`` is assembled from four pieces:

* a smooth odd cap ``phi = r * exp(psi(r^2))`` on ``[0, r0]``,
* the closed form
  ``phi = exp(m/k * H * asin(r - r1)) / (1 - (r - r1)^2)^(1/(2k))`` on ``[r0, r1]``,
* a quintic Hermite blend on ``[r1, r2]``,
* the constant ``c`` on ``[r2, 1]``,

with ``k = n - 2`` and ``m = n - 1``.  The closed form is the unique profile
for which the graphical CMC leaf has ``h / phi^k = sqrt(1 - (r1 - r)^2)``.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial import Polynomial
from numpy.polynomial import chebyshev as C
from scipy.integrate import quad
from scipy.optimize import brentq

from . import kernels

CSV_HEADER = ["r", "phi", "dphi", "ddphi", "h", "kappa_r", "cylinder_H"]

_CHEB_DEG = 48
_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(96)


class DomainError(ValueError):
    """Argument outside the domain of a profile operation."""


class ProfileConstructionError(RuntimeError):
    """No admissible cap could be fitted."""


def sphere_volume(k: int) -> float:
    """Volume of the unit round sphere ``S^k``."""
    return 2.0 * math.pi ** ((k + 1) / 2.0) / math.gamma((k + 1) / 2.0)


# ---------------------------------------------------------------------------
# closed form
# ---------------------------------------------------------------------------

def _check_n(n: int) -> None:
    if int(n) != n or n < 3:
        raise DomainError(f"dimension n must be an integer >= 3, got {n}")


def phi_explicit(r, n: int, H: float, r1: float):
    """Closed-form profile and its first two derivatives.

    Valid for ``r1 - 1 < r <= r1`` (any ``r`` with ``1 - (r1 - r)^2 > 0``).
    Accepts scalars or arrays.
    """
    _check_n(n)
    k = n - 2.0
    m = n - 1.0
    r = np.asarray(r, dtype=float)
    u = r - r1
    w = 1.0 - u * u
    if np.any(w <= 0.0):
        raise DomainError("1 - (r1 - r)^2 must be positive")
    phi = np.exp((m / k) * H * np.arcsin(u)) * w ** (-0.5 / k)
    L1 = (m / k) * H / np.sqrt(w) + u / (k * w)
    dL1 = (m / k) * H * u / w ** 1.5 + (1.0 + u * u) / (k * w * w)
    out = (phi, phi * L1, phi * (L1 * L1 + dL1))
    if r.ndim == 0:
        return tuple(float(x) for x in out)
    return out


def h_closed_form(r, n: int, H: float, r1: float):
    """``exp((n-1) H asin(r - r1))``, the graphical-leaf ``h`` of the closed form."""
    return np.exp((n - 1.0) * H * np.arcsin(np.asarray(r, dtype=float) - r1))


def _log_derivs(r: float, n: int, H: float, r1: float):
    k = n - 2.0
    m = n - 1.0
    u = r - r1
    w = 1.0 - u * u
    L0 = (m / k) * H * math.asin(u) - math.log(w) / (2.0 * k)
    L1 = (m / k) * H / math.sqrt(w) + u / (k * w)
    L2 = (m / k) * H * u / w ** 1.5 + (1.0 + u * u) / (k * w * w)
    return L0, L1, L2


# ---------------------------------------------------------------------------
# cap
# ---------------------------------------------------------------------------

def _cap_base(n: int, H: float, r0: float, r1: float) -> np.ndarray:
    """Coefficients of ``psi`` (powers s..s^3) matching log(phi/r) to 2nd order at r0."""
    L0, L1, L2 = _log_derivs(r0, n, H, r1)
    rhs = [L0 - math.log(r0), L1 - 1.0 / r0, L2 + 1.0 / r0 ** 2]
    A = np.zeros((3, 3))
    for j in (1, 2, 3):
        A[0, j - 1] = r0 ** (2 * j)
        A[1, j - 1] = 2 * j * r0 ** (2 * j - 1)
        A[2, j - 1] = 2 * j * (2 * j - 1) * r0 ** (2 * j - 2)
    return np.linalg.solve(A, rhs)


def _cap_coeffs(base: np.ndarray, a: float, S0: float) -> np.ndarray:
    # bump s (S0 - s)^3 / S0^4 vanishes to third order at s = S0
    bump = np.array([S0 ** 3, -3.0 * S0 ** 2, 3.0 * S0, -1.0]) / S0 ** 4
    return np.append(base, 0.0) + a * bump


def _psi(coef: np.ndarray, s):
    return s * (coef[0] + s * (coef[1] + s * (coef[2] + s * coef[3])))


def _cap_E(coef: np.ndarray, k: float, s):
    """``E(s) = int_0^1 t^k exp(k psi(s t^2)) dt`` by Gauss-Legendre."""
    t = 0.5 * (_GL_NODES + 1.0)
    wt = 0.5 * _GL_WEIGHTS
    s = np.atleast_1d(np.asarray(s, dtype=float))
    vals = t[None, :] ** k * np.exp(k * _psi(coef, s[:, None] * t[None, :] ** 2))
    return vals @ wt


def _cap_integral(coef: np.ndarray, k: float, r0: float) -> float:
    return float(r0 ** (k + 1) * _cap_E(coef, k, r0 * r0)[0])


def fit_cap(n: int, H: float, r0: float, r1: float) -> np.ndarray:
    """Fit ``psi`` so the cap is C^2 at r0 and carries the right volume.

    The extra condition ``int_0^r0 phi^k = exp(m H asin(r0 - r1)) / (m H)`` makes
    the quadrature ``h`` agree with the closed form on ``[r0, r1]``.
    """
    k = n - 2.0
    m = n - 1.0
    S0 = r0 * r0
    base = _cap_base(n, H, r0, r1)
    target = math.exp(m * H * math.asin(r0 - r1)) / (m * H)

    def F(a: float) -> float:
        return _cap_integral(_cap_coeffs(base, a, S0), k, r0) - target

    lo, hi = -1.0, 1.0
    flo, fhi = F(lo), F(hi)
    for _ in range(60):
        if flo * fhi <= 0.0:
            break
        if fhi < 0.0:
            lo, flo = hi, fhi
            hi *= 2.0
            fhi = F(hi)
        else:
            hi, fhi = lo, flo
            lo *= 2.0
            flo = F(lo)
    else:
        raise ProfileConstructionError("cap amplitude not bracketed")
    if flo * fhi > 0.0:
        raise ProfileConstructionError("cap amplitude not bracketed")
    a = brentq(F, lo, hi, xtol=1e-15, rtol=1e-15, maxiter=200)
    return _cap_coeffs(base, a, S0)


def _cheb_table(coef: np.ndarray, k: float, S0: float) -> np.ndarray:
    return C.chebinterpolate(
        lambda x: _cap_E(coef, k, 0.5 * S0 * (x + 1.0)), _CHEB_DEG)


# ---------------------------------------------------------------------------
# blend
# ---------------------------------------------------------------------------

def _quintic_hermite(L: float, y0, y1) -> np.ndarray:
    """Power coefficients in t of the quintic with (value, d1, d2) = y0 at 0, y1 at L."""
    p0, d0, a0 = y0
    p1, d1, a1 = y1
    A = np.array([
        [L ** 3, L ** 4, L ** 5],
        [3 * L ** 2, 4 * L ** 3, 5 * L ** 4],
        [6 * L, 12 * L ** 2, 20 * L ** 3],
    ])
    rhs = [p1 - (p0 + d0 * L + 0.5 * a0 * L * L), d1 - (d0 + a0 * L), a1 - a0]
    hi = np.linalg.solve(A, rhs)
    return np.array([p0, d0, 0.5 * a0, *hi])


def fit_blend(n: int, H: float, r1: float, r2: float, grid: int = 4001):
    """Quintic from the closed form at r1 to a constant ``c`` at r2.

    ``c`` starts at ``1.05 phi(r1)`` and grows by 5% until ``phi' >= 0`` on the blend.
    """
    y0 = phi_explicit(r1, n, H, r1)
    L = r2 - r1
    c = 1.05 * y0[0]
    t = np.linspace(0.0, L, grid)
    for _ in range(400):
        coef = _quintic_hermite(L, y0, (c, 0.0, 0.0))
        P = Polynomial(coef)
        if np.all(P.deriv()(t) >= 0.0) and np.all(P(t) > 0.0):
            return coef, c
        c *= 1.05
    raise ProfileConstructionError("no monotone blend found")


# ---------------------------------------------------------------------------
# profile
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class RadialProfile:
    """Assembled warped-product profile; immutable, tables built at construction."""

    n: int
    H: float
    r0: float
    r1: float
    r2: float
    cap_coeffs: np.ndarray
    blend_coeffs: np.ndarray
    c: float
    r0_requested: float = float("nan")
    _args: tuple = field(default=(), repr=False, compare=False)

    # -- construction -----------------------------------------------------
    @classmethod
    def from_coefficients(cls, n, H, r0, r1, r2, cap_coeffs, blend_coeffs, c,
                          r0_requested=None) -> "RadialProfile":
        _validate(n, H, r0, r1, r2)
        k = n - 2.0
        m = n - 1.0
        cap = np.asarray(cap_coeffs, dtype=float).copy()
        blend = np.asarray(blend_coeffs, dtype=float).copy()
        S0 = r0 * r0
        cheb = _cheb_table(cap, k, S0)
        # direct quadrature: the table extrapolates to its endpoint less accurately
        I_r0 = r0 ** (k + 1) * float(_cap_E(cap, k, S0)[0])
        I_r1 = I_r0 + (1.0 - math.exp(m * H * math.asin(r0 - r1))) / (m * H)
        blendI = (Polynomial(blend) ** int(k)).integ().coef
        I_r2 = I_r1 + float(Polynomial(blendI)(r2 - r1))
        scal = np.array([n, H, r0, r1, r2, c, I_r0, I_r1, I_r2, S0], dtype=float)
        args = tuple(np.ascontiguousarray(x, dtype=float)
                     for x in (scal, cap, cheb, blend, blendI))
        for x in args:
            x.setflags(write=False)
        cap.setflags(write=False)
        blend.setflags(write=False)
        return cls(int(n), float(H), float(r0), float(r1), float(r2), cap, blend,
                   float(c), float(r0 if r0_requested is None else r0_requested),
                   args)

    # -- evaluation -------------------------------------------------------
    @property
    def k(self) -> int:
        return self.n - 2

    def kernel_args(self) -> tuple:
        """Arrays passed to the compiled kernels."""
        return self._args

    def _eval4(self, r):
        r = np.asarray(r, dtype=float)
        if np.any(r < 0.0) or np.any(r > 1.0) or np.any(np.isnan(r)):
            raise DomainError("r must lie in [0, 1]")
        return tuple(np.reshape(x, r.shape) for x in kernels.profile_eval(*self._args, r))

    def eval(self, r):
        """``(phi, phi', phi'')`` of the assembled profile."""
        phi, d1, d2, _ = self._eval4(r)
        if np.ndim(r) == 0:
            return float(phi), float(d1), float(d2)
        return phi, d1, d2

    def phi(self, r):
        return self.eval(r)[0]

    def phi_integral(self, r):
        """``int_0^r phi^(n-2)`` from the construction-time tables."""
        out = self._eval4(r)[3]
        return float(out) if np.ndim(r) == 0 else out

    def h(self, r):
        """``(n-1) H int_0^r phi^(n-2)``."""
        return (self.n - 1) * self.H * self.phi_integral(r)

    def h_ratio(self, r):
        """``h / phi^(n-2)``; zero at the axis."""
        phi, _, _, I = self._eval4(r)
        r = np.asarray(r, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            q = np.where(r > 0.0, (self.n - 1) * self.H * I / phi ** self.k, 0.0)
        return float(q) if q.ndim == 0 else q

    def segments(self) -> list[float]:
        return [0.0, self.r0, self.r1, self.r2, 1.0]

    # -- serialization ----------------------------------------------------
    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "H": self.H,
            "r0": self.r0,
            "r1": self.r1,
            "r2": self.r2,
            "cap_coeffs": [float(x) for x in self.cap_coeffs],
            "blend_coeffs": [float(x) for x in self.blend_coeffs],
            "c": self.c,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d: dict) -> "RadialProfile":
        return cls.from_coefficients(d["n"], d["H"], d["r0"], d["r1"], d["r2"],
                                     d["cap_coeffs"], d["blend_coeffs"], d["c"])

    @classmethod
    def from_json(cls, text: str) -> "RadialProfile":
        return cls.from_dict(json.loads(text))


def _validate(n, H, r0, r1, r2) -> None:
    _check_n(n)
    if not H > 0.0:
        raise DomainError("H must be positive")
    if not 0.0 < r0 < r1 < r2 < 1.0:
        raise DomainError("need 0 < r0 < r1 < r2 < 1")
    if r1 >= 1.0:
        raise DomainError("r1 must be below 1")


def build_profile(n: int = 3, H: float = 1.0, r0: float = 0.25, r1: float = 0.5,
                  r2: float = 0.75, max_halvings: int = 12,
                  check_points: int = 10_000) -> RadialProfile:
    """Construct the assembled profile, halving ``r0`` until the cap is admissible.

    Admissible means the cap amplitude exists and ``h / phi^(n-2) < 1`` on a
    ``check_points`` grid of ``(0, r0]``.
    """
    _validate(n, H, r0, r1, r2)
    blend, c = fit_blend(n, H, r1, r2)
    requested = r0
    last_err: Exception | None = None
    for _ in range(max_halvings + 1):
        try:
            cap = fit_cap(n, H, r0, r1)
            prof = RadialProfile.from_coefficients(n, H, r0, r1, r2, cap, blend, c,
                                                   r0_requested=requested)
            grid = np.linspace(0.0, r0, check_points + 1)[1:]
            q = prof.h_ratio(grid)
            if np.all(q >= 0.0) and np.all(q < 1.0):
                return prof
            last_err = ProfileConstructionError(f"h/phi^k reaches {q.max():.6g}")
        except ProfileConstructionError as exc:
            last_err = exc
        r0 *= 0.5
    raise ProfileConstructionError(f"no admissible cap: {last_err}")


# ---------------------------------------------------------------------------
# module-level operations
# ---------------------------------------------------------------------------

def eval_profile(r, profile: RadialProfile):
    return profile.eval(r)


def h_func(r, profile: RadialProfile, method: str = "table"):
    """``h(r) = (n-1) H int_0^r phi^(n-2)``.

    ``method="table"`` uses construction-time tables (closed form on the middle
    piece); ``method="quad"`` runs adaptive quadrature of the assembled profile.
    """
    if method == "table":
        return profile.h(r)
    if method != "quad":
        raise ValueError(f"unknown method {method!r}")
    k = profile.k

    def one(x: float) -> float:
        if not 0.0 <= x <= 1.0:
            raise DomainError("r must lie in [0, 1]")
        total = 0.0
        cuts = profile.segments()
        for a, b in zip(cuts[:-1], cuts[1:]):
            if x <= a:
                break
            val, _ = quad(lambda u: profile.phi(u) ** k, a, min(b, x),
                          epsabs=1e-13, epsrel=1e-13, limit=200)
            total += val
        return (profile.n - 1) * profile.H * total

    if np.ndim(r) == 0:
        return one(float(r))
    return np.array([one(float(x)) for x in np.ravel(r)]).reshape(np.shape(r))


def _positive_r(r):
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0.0):
        raise DomainError("operation undefined at r = 0")
    return r


def kappa_r(r, profile: RadialProfile):
    """``phi'/phi``: mean curvature of the geodesic sphere of radius ``r``."""
    _positive_r(r)
    phi, d1, _ = profile.eval(r)
    return d1 / phi


def cylinder_H(r, profile: RadialProfile):
    """Mean curvature ``(n-2)/(n-1) phi'/phi`` of the vertical cylinder over radius ``r``."""
    return (profile.n - 2) / (profile.n - 1) * kappa_r(r, profile)


def ricci_normal(r, profile: RadialProfile):
    """``Ric(d_r, d_r) = -(n-2) phi''/phi`` of the product with a line."""
    _positive_r(r)
    phi, _, d2 = profile.eval(r)
    return -(profile.n - 2) * d2 / phi


def sample_rows(profile: RadialProfile, r: Sequence[float]) -> np.ndarray:
    """Columns matching :data:`CSV_HEADER`; kappa and cylinder H are 0 at r = 0 by convention."""
    r = np.asarray(r, dtype=float)
    phi, d1, d2, _ = profile._eval4(r)
    h = profile.h(r)
    with np.errstate(divide="ignore", invalid="ignore"):
        kap = np.where(r > 0.0, d1 / phi, np.nan)
    cyl = (profile.n - 2) / (profile.n - 1) * kap
    return np.column_stack([r, phi, d1, d2, h, kap, cyl])


def write_profile_csv(path, profile: RadialProfile, num: int = 1001) -> None:
    rows = sample_rows(profile, np.linspace(0.0, 1.0, num))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for row in rows:
            w.writerow([repr(float(x)) for x in row])


def read_profile_csv(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        if header != CSV_HEADER:
            raise ValueError(f"unexpected header {header}")
        return np.array([[float(x) for x in row] for row in rd])


def cap_formula(r, profile: RadialProfile):
    """Cap expression ``r exp(psi(r^2))`` and derivatives for any real ``r``.

    The cap is odd in ``r``; this is used to probe derivatives at the axis.
    """
    r = np.asarray(r, dtype=float)
    c = profile.cap_coeffs
    s = r * r
    psi = _psi(c, s)
    dpsi = c[0] + s * (2 * c[1] + s * (3 * c[2] + s * 4 * c[3]))
    ddpsi = 2 * c[1] + s * (6 * c[2] + s * 12 * c[3])
    ep = np.exp(psi)
    return (r * ep, ep * (1.0 + 2.0 * s * dpsi),
            r * ep * (6.0 * dpsi + 4.0 * s * dpsi * dpsi + 4.0 * s * ddpsi))


def junction_jumps(profile: RadialProfile) -> dict:
    """Relative jumps of ``(phi, phi', phi'')`` between adjacent pieces at r0, r1, r2."""
    p = profile
    blend = Polynomial(p.blend_coeffs)
    L = p.r2 - p.r1
    left = {
        "r0": [float(x) for x in cap_formula(p.r0, p)],
        "r1": list(phi_explicit(p.r1, p.n, p.H, p.r1)),
        "r2": [float(blend(L)), float(blend.deriv()(L)), float(blend.deriv(2)(L))],
    }
    right = {
        "r0": list(phi_explicit(p.r0, p.n, p.H, p.r1)),
        "r1": [float(blend(0.0)), float(blend.deriv()(0.0)), float(blend.deriv(2)(0.0))],
        "r2": [p.c, 0.0, 0.0],
    }
    out = {}
    for key in left:
        for order, (a, b) in enumerate(zip(left[key], right[key])):
            out[f"{key}_d{order}"] = abs(a - b) / max(1.0, abs(b))
    return out


def verify_profile(profile: RadialProfile) -> "VerificationReport":
    """Invariant suite for an assembled profile."""
    from .report import VerificationReport

    p = profile
    n, H, k = p.n, p.H, p.k
    rep = VerificationReport()
    phi0 = p.eval(0.0)
    rep.add("phi_at_0", phi0[0], 0.0, 0.0, "TRIVIAL")
    rep.add("dphi_at_0", phi0[1], 1.0, 1e-15, "TRIVIAL")
    rep.add("ddphi_at_0", phi0[2], 0.0, 0.0, "TRIVIAL")
    # even derivatives at the axis from central differences of the cap expression
    hstep = 1e-3 * p.r0
    f = [float(cap_formula(j * hstep, p)[0]) for j in (-2, -1, 0, 1, 2)]
    d2 = (f[3] - 2 * f[2] + f[1]) / hstep ** 2
    d4 = (f[4] - 4 * f[3] + 6 * f[2] - 4 * f[1] + f[0]) / hstep ** 4
    rep.add("even_derivative_0", f[2], 0.0, 0.0, "PAPER")
    rep.add("even_derivative_2", d2, 0.0, 1e-6, "PAPER")
    rep.add("even_derivative_4", d4, 0.0, 1e-3, "PAPER")
    for name, jump in junction_jumps(p).items():
        rep.bound(f"junction_{name}", jump, 1e-9, "DERIVED")
    mid = np.linspace(p.r0, p.r1, 201)[1:]  # r0 itself is evaluated on the cap
    ex = phi_explicit(mid, n, H, p.r1)
    asm = p.eval(mid)
    dev = max(float(np.max(np.abs(a - b) / np.abs(b))) for a, b in zip(asm, ex))
    rep.bound("closed_form_agreement", dev, 1e-14, "PAPER")
    rep.add("phi_at_r1", p.eval(p.r1)[0], 1.0, 1e-15, "PAPER")
    rep.add("h_closed_form_at_r1", p.h(p.r1), 1.0, 1e-9, "PAPER")
    hc = h_closed_form(mid, n, H, p.r1)
    rep.bound("h_matches_closed_form", np.max(np.abs(p.h(mid) - hc)), 1e-9, "PAPER")
    pts = np.array([0.05, p.r0, 0.5 * (p.r0 + p.r1), p.r1, 0.5 * (p.r1 + p.r2), p.r2, 1.0])
    rep.bound("h_table_vs_quadrature", np.max(np.abs(p.h(pts) - h_func(pts, p, "quad"))),
              1e-10, "DERIVED")
    band = np.linspace(p.r0, p.r1, 1001)[:-1]
    rep.bound("h_ratio_sqrt_law", np.max(np.abs(p.h_ratio(band) -
                                                np.sqrt(1.0 - (p.r1 - band) ** 2))),
              1e-9, "PAPER")
    grid = np.linspace(0.0, p.r1, 10_001)[:-1]
    q = p.h_ratio(grid)
    rep.flag("h_ratio_in_unit_interval", bool(np.all((q >= 0.0) & (q < 1.0))), "PAPER")
    rep.bound("h_ratio_near_axis", p.h_ratio(1e-5), 1e-3, "PAPER")
    hh = 1e-4
    slope = (p.h_ratio(hh) - p.h_ratio(0.0)) / hh
    rep.add("h_ratio_slope_at_axis", slope, H, 1e-3, "PAPER")
    rep.add("kappa_r_at_r1", kappa_r(p.r1, p), (n - 1) * H / (n - 2), 1e-9, "DERIVED")
    rep.add("cylinder_H_at_r1", cylinder_H(p.r1, p), H, 1e-9, "PAPER")
    flat = np.linspace(p.r2, 1.0, 101)
    rep.bound("cylinder_H_flat", np.max(np.abs(cylinder_H(flat, p))), 0.0, "PAPER")
    rep.bound("phi_flat_spread", np.ptp(p.phi(flat)), 0.0, "PAPER")
    blend = np.linspace(p.r1, p.r2, 2001)
    rep.flag("blend_monotone", bool(np.all(p.eval(blend)[1] >= 0.0)), "DERIVED")
    scan = np.linspace(0.0, 1.0, 20_001)[1:]
    ric = ricci_normal(scan, p)
    rep.flag("ricci_below_minus_mH2_somewhere", bool(np.min(ric) <= -(n - 1) * H * H),
             "PAPER")
    return rep
