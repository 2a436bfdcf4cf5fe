"""A foliation of the flat 2-torus whose geodesic curvature is a prescribed ``-f``.

The torus ``[0, Lx) x [0, 1)`` carries four marked vertical lines
``l_k = k Lx / 4``.  Strips of half-width ``eps`` around ``l0`` and ``l2`` are
foliated by vertical lines; the two complementary strips (around ``l1`` and
``l3``) carry Reeb components whose leaves are the graphs
``y = c + rho((x - l_k) / hw)`` with ``rho(xi) = -A sec(pi xi / 2)``.

Given ``f`` with ``f = -1`` near ``l1``, ``+1`` near ``l3`` and the
reflection symmetries, a 1-form ``omega = a dx + b dy`` with
``d omega = f dV`` is built by integration and symmetry averaging, and the
metric ``g = w^-2 N N + w^2 T T`` (``w = omega(T)``) makes ``-f`` the
geodesic curvature of every leaf with respect to the transverse field ``N``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .radial_metric import DomainError
from .report import VerificationReport

LEAF_REPORT_HEADER = ["leaf_id", "s", "x", "y", "kappa", "f", "abs_err"]


class GridError(DomainError):
    """Grid sizes incompatible with the symmetry group."""


class StripOverlapError(DomainError):
    pass


class LeafwiseVanishingError(RuntimeError):
    """``omega`` vanishes (below the margin) on some leaf tangent."""

    def __init__(self, msg: str, index: int, x: float, value: float) -> None:
        super().__init__(msg)
        self.index = index
        self.x = x
        self.value = value


class NonPositiveWError(RuntimeError):
    pass


class CurveLeavesGridError(DomainError):
    pass


# ---------------------------------------------------------------------------
# grid
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FlatTorus:
    Lx: float = 4.0
    Nx: int = 512
    Ny: int = 128
    Ly: float = 1.0

    def __post_init__(self) -> None:
        if self.Nx % 4 or self.Ny % 4 or self.Nx < 16 or self.Ny < 4:
            raise GridError("Nx and Ny must be divisible by 4 (Nx >= 16)")
        if not self.Lx > 0.0:
            raise GridError("Lx must be positive")

    @property
    def dx(self) -> float:
        return self.Lx / self.Nx

    @property
    def dy(self) -> float:
        return self.Ly / self.Ny

    @property
    def x(self) -> np.ndarray:
        return np.arange(self.Nx) * self.dx

    @property
    def y(self) -> np.ndarray:
        return np.arange(self.Ny) * self.dy

    @property
    def lines(self) -> tuple[float, float, float, float]:
        q = self.Lx / 4.0
        return (0.0, q, 2.0 * q, 3.0 * q)

    def reflect_index(self, k: int) -> np.ndarray:
        """Column permutation of the reflection ``x -> 2 l_k - x``."""
        return (2 * k * (self.Nx // 4) - np.arange(self.Nx)) % self.Nx

    def shift_index(self, m: int) -> np.ndarray:
        """Row permutation of the vertical translation by ``m`` cells."""
        return (np.arange(self.Ny) + m) % self.Ny


def _s5(t):
    return t ** 3 * (10.0 - 15.0 * t + 6.0 * t * t)


def _S5(t):
    # antiderivative of _s5 with _S5(0) = 0, _S5(1) = 1/2
    return t ** 4 * (2.5 - 3.0 * t + t * t)


# ---------------------------------------------------------------------------
# foliation
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Foliation2D:
    torus: FlatTorus
    eps_strip: float
    amplitude: float
    T: np.ndarray = field(repr=False)  # (Nx, 2) leaf tangent, y-independent
    N: np.ndarray = field(repr=False)  # (Nx, 2) transverse unit normal
    region: np.ndarray = field(repr=False)  # (Nx,) 0: strip l0, 1: reeb l1, 2: strip l2, 3: reeb l3

    @property
    def hw(self) -> float:
        return self.torus.Lx / 4.0 - self.eps_strip

    def center(self, comp: int) -> float:
        return self.torus.lines[comp]

    def _xi(self, x, comp):
        return (np.asarray(x, dtype=float) - self.center(comp)) / self.hw

    def rho(self, x, comp: int):
        return -self.amplitude / np.cos(0.5 * np.pi * self._xi(x, comp))

    def drho(self, x, comp: int):
        th = 0.5 * np.pi * self._xi(x, comp)
        k = 0.5 * np.pi / self.hw
        return -self.amplitude * k * np.tan(th) / np.cos(th)

    def d2rho(self, x, comp: int):
        th = 0.5 * np.pi * self._xi(x, comp)
        k = 0.5 * np.pi / self.hw
        sec = 1.0 / np.cos(th)
        return -self.amplitude * k * k * (sec * np.tan(th) ** 2 + sec ** 3)

    def field_at(self, x):
        """Analytic ``(T, N)`` at arbitrary abscissae."""
        x = np.atleast_1d(np.asarray(x, dtype=float)) % self.torus.Lx
        reg = self.classify(x)
        N = np.zeros((len(x), 2))
        N[reg == 0] = (1.0, 0.0)
        N[reg == 2] = (-1.0, 0.0)
        for comp, sgn in ((1, 1.0), (3, -1.0)):
            m = reg == comp
            p = self.drho(x[m], comp)
            nr = np.hypot(p, 1.0)
            N[m, 0] = sgn * p / nr
            N[m, 1] = -sgn / nr
        T = np.stack([-N[:, 1], N[:, 0]], axis=1)
        return T, N

    def classify(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float) % self.torus.Lx
        L = self.torus.Lx
        e = self.eps_strip
        reg = np.where(x <= L / 2.0, 1, 3)
        reg = np.where((x <= e) | (x >= L - e), 0, reg)
        reg = np.where(np.abs(x - L / 2.0) <= e, 2, reg)
        return reg


def default_amplitude(torus: FlatTorus, eps_strip: float) -> float:
    """Amplitude for which ``omega(T) = hw`` at the Reeb centres."""
    hw = torus.Lx / 4.0 - eps_strip
    return 4.0 * hw / math.pi ** 2


def build_foliation(torus: FlatTorus, eps_strip: float = 0.5,
                    reeb_shape: float | None = None) -> Foliation2D:
    """Vertical lines on the strips, secant-type Reeb leaves between them."""
    q = torus.Lx / 4.0
    if not 0.0 < eps_strip < q:
        raise StripOverlapError("need 0 < eps_strip < Lx/4 (disjoint strips)")
    amp = default_amplitude(torus, eps_strip) if reeb_shape is None else float(reeb_shape)
    if not amp > 0.0:
        raise DomainError("reeb_shape must be positive")
    fol = Foliation2D(torus, float(eps_strip), amp, np.empty(0), np.empty(0), np.empty(0))
    T, N = fol.field_at(torus.x)
    reg = fol.classify(torus.x)
    for arr in (T, N, reg):
        arr.setflags(write=False)
    return Foliation2D(torus, float(eps_strip), amp, T, N, reg)


# ---------------------------------------------------------------------------
# admissible f
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AdmissibleF:
    torus: FlatTorus
    eps: float
    f: np.ndarray = field(repr=False)  # (Nx,) y-independent

    def grid(self) -> np.ndarray:
        return np.broadcast_to(self.f[:, None], (self.torus.Nx, self.torus.Ny))

    def __call__(self, x):
        return f_value(x, self.torus.Lx, self.eps)

    def primitive(self, x):
        return f_primitive(x, self.torus.Lx, self.eps)


def _f_half(x, L, e):
    h = L / 2.0
    out = -np.ones_like(x)
    a = x <= e
    out[a] = -_s5(x[a] / e)
    b = x >= h - e
    out[b] = -_s5((h - x[b]) / e)
    return out


def f_value(x, Lx: float, eps: float):
    """Transition function: odd about ``l0``/``l2``, even about ``l1``/``l3``."""
    x = np.atleast_1d(np.asarray(x, dtype=float)) % Lx
    lo = x <= Lx / 2.0
    out = np.empty_like(x)
    out[lo] = _f_half(x[lo], Lx, eps)
    out[~lo] = -_f_half(Lx - x[~lo], Lx, eps)
    return out


def f_primitive(x, Lx: float, eps: float):
    """``int_0^x f`` on ``[0, Lx]`` in closed form (periodic since ``int f = 0``)."""
    x = np.atleast_1d(np.asarray(x, dtype=float)) % Lx
    h = Lx / 2.0
    e = eps

    def half(u):
        # int_0^u f for u in [0, h]
        out = np.empty_like(u)
        a = u <= e
        out[a] = -e * _S5(u[a] / e)
        mid = (u > e) & (u < h - e)
        out[mid] = -0.5 * e - (u[mid] - e)
        b = u >= h - e
        total = -e - (h - 2.0 * e)
        out[b] = total + e * _S5((h - u[b]) / e)
        return out

    lo = x <= h
    out = np.empty_like(x)
    out[lo] = half(x[lo])
    # f odd about l2: int_0^x f = int_0^(L-x) f for x in [h, L]
    out[~lo] = half(Lx - x[~lo])
    return out


def build_f(torus: FlatTorus, foliation: Foliation2D | None = None,
            transition_shape: float | None = None) -> AdmissibleF:
    """Grid ``f`` with exact (F1)-(F3) symmetries.

    ``transition_shape`` is the transition width (defaults to the strip
    half-width, so ``f = -+1`` exactly on the Reeb components).
    """
    eps = transition_shape
    if eps is None:
        eps = foliation.eps_strip if foliation is not None else 0.5
    q = torus.Nx // 4
    if not 0.0 < eps <= torus.Lx / 4.0:
        raise DomainError("transition width must lie in (0, Lx/4]")
    if foliation is not None and eps > foliation.eps_strip + 1e-15:
        raise DomainError("transition must stay inside the strips")
    x = torus.x
    base = f_value(x[: q + 1], torus.Lx, eps)  # [l0, l1]
    base[0] = 0.0
    f = np.empty(torus.Nx)
    f[: q + 1] = base
    f[q: 2 * q + 1] = base[::-1]  # even about l1
    f[2 * q] = 0.0
    f[2 * q + 1:] = -f[1: 2 * q][::-1]  # odd about l2
    f.setflags(write=False)
    return AdmissibleF(torus, float(eps), f)


def integral_f(F: AdmissibleF) -> float:
    """``sum f dA`` with exact summation."""
    t = F.torus
    return math.fsum(np.repeat(F.f, t.Ny)) * t.dx * t.dy


# ---------------------------------------------------------------------------
# omega
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SolvedForm:
    torus: FlatTorus
    a: np.ndarray = field(repr=False)
    b: np.ndarray = field(repr=False)
    w: np.ndarray = field(repr=False)  # omega(T) on the grid columns
    sign: float = 1.0
    margin: float = 0.0


def pullback(torus: FlatTorus, k: int, a: np.ndarray, b: np.ndarray):
    """Coefficients of ``R_k^* (a dx + b dy)`` for ``R_k(x, y) = (2 l_k - x, y)``."""
    idx = torus.reflect_index(k)
    return -a[idx], b[idx]


def symmetrize(torus: FlatTorus, a: np.ndarray, b: np.ndarray):
    """Project onto forms with ``R_k^* omega = (-1)^k omega``.

    ``omega -> (omega - R1^* omega)/2 -> (omega + R2^* omega)/2``; the y-average
    is the identity on these y-independent coefficients.
    """
    a1, b1 = pullback(torus, 1, a, b)
    a3, b3 = 0.5 * (a - a1), 0.5 * (b - b1)
    a2, b2 = pullback(torus, 2, a3, b3)
    return 0.5 * (a3 + a2), 0.5 * (b3 + b2)


def _leaf_cot(fol: Foliation2D, F: AdmissibleF, b: np.ndarray) -> np.ndarray:
    """``a = b cot(beta)`` so that ``ker omega`` is the flat normal of the leaves."""
    x = fol.torus.x
    a = np.zeros_like(b)
    for comp in (1, 3):
        m = fol.region == comp
        xc = x[m]
        p = fol.drho(xc, comp)
        with np.errstate(divide="ignore", invalid="ignore"):
            val = b[m] / p
        at_c = np.isclose(xc, fol.center(comp), rtol=0.0, atol=1e-12 * fol.torus.Lx)
        # limit b/rho' = f/rho'' at the centre
        val[at_c] = F(xc[at_c]) / fol.d2rho(xc[at_c], comp)
        a[m] = val
    return a


def solve_omega(F: AdmissibleF, foliation: Foliation2D, margin: float = 1e-3,
                dx_term: bool = True) -> SolvedForm:
    """Solve ``d omega = f dV`` and symmetrize.

    ``b = int f`` (closed form), then the averaging steps.  With ``dx_term``
    the closed term ``a(x) dx`` is chosen so that ``omega`` vanishes on the
    flat leaf normals; ``dx_term=False`` keeps ``a = 0``.
    """
    t = F.torus
    if math.fsum(F.f) != 0.0:
        raise DomainError("int f dV must vanish")
    b1 = F.primitive(t.x)
    a, b = symmetrize(t, np.zeros(t.Nx), b1)
    if dx_term:
        a = _leaf_cot(foliation, F, b)
        a, b = symmetrize(t, a, b)
    T = foliation.T
    w = a * T[:, 0] + b * T[:, 1]
    sign = 1.0
    if np.all(w < 0.0):
        a, b, w, sign = -a, -b, -w, -1.0
    i = int(np.argmin(np.abs(w)))
    if abs(w[i]) < margin or not np.all(w > 0.0):
        raise LeafwiseVanishingError(
            f"omega(T) = {w[i]:.3g} at x = {t.x[i]:.6g} (margin {margin})", i,
            float(t.x[i]), float(w[i]))
    for arr in (a, b, w):
        arr.setflags(write=False)
    return SolvedForm(t, a, b, w, sign, float(margin))


# ---------------------------------------------------------------------------
# metric and curvature
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Metric2D:
    torus: FlatTorus
    g: np.ndarray = field(repr=False)  # (Nx, Ny, 2, 2)
    dgx: np.ndarray = field(repr=False)
    dgy: np.ndarray = field(repr=False)

    def det(self) -> np.ndarray:
        g = self.g
        return g[..., 0, 0] * g[..., 1, 1] - g[..., 0, 1] * g[..., 1, 0]

    def _bilinear(self, arr, pts):
        t = self.torus
        u = (pts[:, 0] % t.Lx) / t.dx
        v = (pts[:, 1] % t.Ly) / t.dy
        i0 = np.floor(u).astype(np.int64)
        j0 = np.floor(v).astype(np.int64)
        fu = (u - i0)[:, None, None]
        fv = (v - j0)[:, None, None]
        i0 %= t.Nx
        j0 %= t.Ny
        i1 = (i0 + 1) % t.Nx
        j1 = (j0 + 1) % t.Ny
        return ((1 - fu) * (1 - fv) * arr[i0, j0] + fu * (1 - fv) * arr[i1, j0]
                + (1 - fu) * fv * arr[i0, j1] + fu * fv * arr[i1, j1])

    def at(self, pts):
        pts = np.asarray(pts, dtype=float).reshape(-1, 2)
        return self._bilinear(self.g, pts), self._bilinear(self.dgx, pts), \
            self._bilinear(self.dgy, pts)


def _d4(arr: np.ndarray, h: float, axis: int) -> np.ndarray:
    """Fourth-order periodic centred difference."""
    r = np.roll
    return (-r(arr, -2, axis) + 8.0 * r(arr, -1, axis) - 8.0 * r(arr, 1, axis)
            + r(arr, 2, axis)) / (12.0 * h)


def build_metric(omega: SolvedForm, foliation: Foliation2D) -> Metric2D:
    """``g = w^-2 N N^T + w^2 T T^T`` with ``w = omega(J N)``, ``J`` the rotation by +pi/2."""
    t = omega.torus
    N = foliation.N
    JN = np.stack([-N[:, 1], N[:, 0]], axis=1)
    w = omega.a * JN[:, 0] + omega.b * JN[:, 1]
    if np.any(w <= 0.0):
        raise NonPositiveWError("omega(JN) must be positive")
    g1 = (1.0 / w ** 2)[:, None, None] * np.einsum("ia,ib->iab", N, N)
    g2 = (w ** 2)[:, None, None] * np.einsum("ia,ib->iab", JN, JN)
    gx = g1 + g2
    g = np.ascontiguousarray(np.broadcast_to(gx[:, None], (t.Nx, t.Ny, 2, 2)))
    dgx = _d4(g, t.dx, 0)
    dgy = _d4(g, t.dy, 1)
    for arr in (g, dgx, dgy):
        arr.setflags(write=False)
    return Metric2D(t, g, dgx, dgy)


def geodesic_curvature(points, velocity, acceleration, metric: Metric2D,
                       orientation) -> np.ndarray:
    """Signed geodesic curvature ``g(nabla_v v, n) / g(v, v)`` of a sampled curve.

    ``n`` is the ``g``-unit normal on the side of the flat vector field
    ``orientation``.  Metric values and first derivatives are bilinearly
    interpolated from the grid.
    """
    P = np.asarray(points, dtype=float).reshape(-1, 2)
    v = np.asarray(velocity, dtype=float).reshape(-1, 2)
    acc = np.asarray(acceleration, dtype=float).reshape(-1, 2)
    Nref = np.asarray(orientation, dtype=float).reshape(-1, 2)
    if len(P) < 1 or not np.all(np.isfinite(P)):
        raise CurveLeavesGridError("curve samples must be finite")
    G, Dx, Dy = metric.at(P)
    Gi = np.linalg.inv(G)
    dG = np.stack([Dx, Dy], axis=1)  # dG[p, l, i, j] = d_l g_ij
    t1 = np.einsum("pilj->plij", dG)  # d_i g_lj
    t2 = np.einsum("pjli->plij", dG)  # d_j g_li
    Gam = 0.5 * np.einsum("pkl,plij->pkij", Gi, t1 + t2 - dG)
    A = acc + np.einsum("pkij,pi,pj->pk", Gam, v, v)
    eta = np.stack([-v[:, 1], v[:, 0]], axis=1)
    n = np.einsum("pij,pj->pi", Gi, eta)
    n /= np.sqrt(np.einsum("pi,pi->p", eta, n))[:, None]
    n *= np.sign(np.einsum("pi,pi->p", n, Nref))[:, None]
    return np.einsum("pi,pij,pj->p", A, G, n) / np.einsum("pi,pij,pj->p", v, G, v)


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------

@dataclass
class TorusModel:
    torus: FlatTorus
    foliation: Foliation2D
    f: AdmissibleF
    omega: SolvedForm
    metric: Metric2D
    leaf_rows: list = field(default_factory=list)
    checks: VerificationReport = field(default_factory=VerificationReport)

    def margins(self) -> dict:
        return {"omega_T_min": float(self.omega.w.min()),
                "omega_T_max": float(self.omega.w.max()),
                "margin": self.omega.margin}


def sample_leaves(model: TorusModel, rng: np.random.Generator, n_reeb: int = 3,
                  n_strip: int = 4, slope_max: float = 10.0, n_y: int = 32):
    """Leaf samples at grid columns.

    Returns rows ``(leaf_id, s, x, y, kappa, f)``.  Reeb leaves are sampled
    where ``|slope| < slope_max``.
    """
    fol = model.foliation
    t = model.torus
    x = t.x
    rows = []
    lid = 0
    for comp in (1, 3):
        m = (fol.region == comp)
        xs = x[m]
        p = fol.drho(xs, comp)
        keep = np.abs(p) < slope_max
        xs, p = xs[keep], p[keep]
        for _ in range(n_reeb):
            y0 = rng.uniform(0.0, t.Ly)
            ys = y0 + fol.rho(xs, comp)
            v = np.stack([np.ones_like(xs), p], axis=1)
            acc = np.stack([np.zeros_like(xs), fol.d2rho(xs, comp)], axis=1)
            _, Nref = fol.field_at(xs)
            kap = geodesic_curvature(np.stack([xs, ys], 1), v, acc, model.metric, Nref)
            s = np.concatenate([[0.0], np.cumsum(np.hypot(np.diff(xs), np.diff(ys)))])
            fv = model.f(xs)
            rows += [(lid, s[i], xs[i], ys[i] % t.Ly, kap[i], fv[i]) for i in range(len(xs))]
            lid += 1
    strip_cols = np.nonzero((fol.region == 0) | (fol.region == 2))[0]
    picks = rng.choice(strip_cols, size=min(n_strip, len(strip_cols)), replace=False)
    for i in np.sort(picks):
        ys = np.arange(n_y) * (t.Ly / n_y)
        xs = np.full(n_y, x[i])
        T, Nref = fol.field_at(xs)
        kap = geodesic_curvature(np.stack([xs, ys], 1), T, np.zeros_like(T),
                                 model.metric, Nref)
        fv = model.f(xs)
        rows += [(lid, ys[j], xs[j], ys[j], kap[j], fv[j]) for j in range(n_y)]
        lid += 1
    # the fixed line l0 itself
    ys = np.arange(n_y) * (t.Ly / n_y)
    xs = np.zeros(n_y)
    T, Nref = fol.field_at(xs)
    kap = geodesic_curvature(np.stack([xs, ys], 1), T, np.zeros_like(T), model.metric, Nref)
    rows += [(lid, ys[j], 0.0, ys[j], kap[j], 0.0) for j in range(n_y)]
    return rows


def build_model(Lx: float = 4.0, Nx: int = 512, Ny: int = 128, eps_strip: float = 0.5,
                reeb_shape: float | None = None, margin: float = 1e-3) -> TorusModel:
    torus = FlatTorus(Lx, Nx, Ny)
    fol = build_foliation(torus, eps_strip, reeb_shape)
    F = build_f(torus, fol)
    om = solve_omega(F, fol, margin)
    g = build_metric(om, fol)
    return TorusModel(torus, fol, F, om, g)


def max_kappa_error(rows) -> float:
    return max(abs(r[4] + r[5]) for r in rows)


def verify_model(model: TorusModel, seed: int = 0) -> VerificationReport:
    rep = VerificationReport()
    t = model.torus
    fol = model.foliation
    F = model.f
    om = model.omega
    rng = np.random.default_rng(seed)

    # f
    q = t.Nx // 4
    rep.add("f_at_l1", F.f[q], -1.0, 0.0, "PAPER")
    rep.add("f_at_l3", F.f[3 * q], 1.0, 0.0, "PAPER")
    rep.add("f_at_l0", F.f[0], 0.0, 0.0, "TRIVIAL")
    rep.add("f_at_l2", F.f[2 * q], 0.0, 0.0, "TRIVIAL")
    reeb1 = fol.region == 1
    reeb3 = fol.region == 3
    rep.add("f_plateau_l1_max_dev", np.max(np.abs(F.f[reeb1] + 1.0)), 0.0, 0.0, "PAPER")
    rep.add("f_plateau_l3_max_dev", np.max(np.abs(F.f[reeb3] - 1.0)), 0.0, 0.0, "PAPER")
    for k, sgn in ((0, -1), (1, 1), (2, -1), (3, 1)):
        d = np.max(np.abs(F.f[t.reflect_index(k)] - sgn * F.f))
        rep.add(f"f_symmetry_R{k}", d, 0.0, 0.0, "PAPER")
    rep.add("integral_f_dV", integral_f(F), 0.0, 0.0, "TRIVIAL")

    # omega
    xm = t.x + 0.5 * t.dx
    db = (np.roll(om.b, -1) - om.b) / t.dx
    rep.bound("db_dx_minus_f_midpoint", np.max(np.abs(db - om.sign * F(xm))),
              1e-4, "DERIVED")
    cell = F.primitive(t.x + t.dx) - F.primitive(t.x)
    stokes = (np.roll(om.b, -1) - om.b) - om.sign * cell
    rep.bound("stokes_cellwise", np.max(np.abs(stokes)), 1e-12, "DERIVED")
    for k in range(4):
        a2, b2 = pullback(t, k, om.a, om.b)
        s = (-1) ** k
        dev = max(np.max(np.abs(a2 - s * om.a)), np.max(np.abs(b2 - s * om.b)))
        rep.add(f"omega_symmetry_R{k}", dev, 0.0, 0.0, "DERIVED")
    a2, b2 = symmetrize(t, om.a, om.b)
    rep.add("averaging_idempotent", max(np.max(np.abs(a2 - om.a)),
                                        np.max(np.abs(b2 - om.b))), 0.0, 0.0, "TRIVIAL")
    rep.flag("omega_T_above_margin", bool(om.w.min() > om.margin), "PAPER")

    # foliation
    strips = (fol.region == 0) | (fol.region == 2)
    rep.add("strip_tangent_vertical", np.max(np.abs(fol.T[strips, 0])), 0.0, 0.0, "TRIVIAL")
    bad = 0
    for k in range(4):
        idx = t.reflect_index(k)
        pushed = fol.T * np.array([-1.0, 1.0])
        cross = pushed[:, 0] * fol.T[idx, 1] - pushed[:, 1] * fol.T[idx, 0]
        bad += int(np.sum(np.abs(cross) > 1e-12))
    rep.add("leaf_field_reflection_equivariance", bad, 0.0, 0.0, "PAPER")
    Tc = fol.T[q]
    rep.add("reeb_center_tangent_horizontal", abs(Tc[0]), np.max(np.abs(fol.T[reeb1, 0])),
            0.0, "DERIVED")

    # metric
    g = model.metric.g
    rep.bound("det_g_minus_1", np.max(np.abs(model.metric.det() - 1.0)), 1e-9, "PAPER")
    m = int(rng.integers(1, t.Ny))
    rep.add("g_translation_invariance", np.max(np.abs(g[:, t.shift_index(m)] - g)), 0.0,
            0.0, "DERIVED")
    eq = 0.0
    for k in range(4):
        idx = t.reflect_index(k)
        Rm = np.diag([-1.0, 1.0])
        pulled = np.einsum("ai,xyij,jb->xyab", Rm, g[idx], Rm)
        eq = max(eq, float(np.max(np.abs(pulled - g))))
    rep.bound("g_reflection_invariance", eq, 1e-12, "DERIVED")
    T = fol.T
    lenT = np.sqrt(np.einsum("ia,iab,ib->i", T, g[:, 0], T))
    rep.bound("omega_T_equals_g_length", np.max(np.abs(lenT - om.w)), 1e-9, "PAPER")

    # curvature
    rows = sample_leaves(model, rng)
    model.leaf_rows = rows
    rep.bound("max_abs_kappa_plus_f", max_kappa_error(rows), 5e-2, "DERIVED")
    return rep


def write_leaf_report(path, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(LEAF_REPORT_HEADER)
        for lid, s, x, y, k, f in rows:
            w.writerow([int(lid), repr(float(s)), repr(float(x)), repr(float(y)),
                        repr(float(k)), repr(float(f)), repr(float(abs(k + f)))])


def write_grid_csv(path, values: np.ndarray) -> None:
    """Matrix CSV with one row per grid row ``y_j`` and one column per ``x_i``."""
    arr = np.atleast_2d(values)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in arr:
            w.writerow([repr(float(v)) for v in row])
