"""Pure-Python implementation of the numerical hot loops.

Mirrors ``_kernels.pyx`` function for function.  Used when the compiled
extension is not available or ``CMCFOLIATION_PURE=1`` is set.

Profile data is passed as five float64 arrays (see
:meth:`cmcfoliation.radial_metric.RadialProfile.kernel_args`):

scal
    ``[n, H, r0, r1, r2, c, I_r0, I_r1, I_r2, S0]``
cap
    coefficients ``c1..c4`` of ``psi(s) = log(phi/r)``, ``s = r**2``
cheb
    Chebyshev coefficients of ``E(s) = I(r) / r**(n-1)`` on ``[0, S0]``
blend
    power coefficients of the quintic ``phi(r1 + t)``
blendI
    power coefficients of ``int_0^t phi(r1 + u)**(n-2) du``
"""
import math

import numpy as np

STOP_MAX_S = 0
STOP_AXIS = 1
STOP_R_ABOVE = 2
STOP_Z_ABOVE = 3
STOP_VERTICAL = 4
STOP_UNDERFLOW = 5
STOP_MAX_STEPS = 6

# Dormand-Prince 5(4)
_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0)
_E = (
    71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40,
)


def _horner(coef, x):
    acc = 0.0
    for a in reversed(coef):
        acc = acc * x + a
    return acc


def _clenshaw(coef, x):
    # x already mapped to [-1, 1]
    b1 = 0.0
    b2 = 0.0
    for a in reversed(coef[1:]):
        b1, b2 = 2.0 * x * b1 - b2 + a, b1
    return x * b1 - b2 + coef[0]


def phi_scalar(scal, cap, cheb, blend, blendI, r):
    """Return ``(phi, dphi, ddphi, I)`` at a single radius ``r >= 0``."""
    n = scal[0]
    H = scal[1]
    r0 = scal[2]
    r1 = scal[3]
    r2 = scal[4]
    k = n - 2.0
    if r <= r0:
        s = r * r
        psi = s * (cap[0] + s * (cap[1] + s * (cap[2] + s * cap[3])))
        dpsi = cap[0] + s * (2 * cap[1] + s * (3 * cap[2] + s * 4 * cap[3]))
        ddpsi = 2 * cap[1] + s * (6 * cap[2] + s * 12 * cap[3])
        ep = math.exp(psi)
        phi = r * ep
        dphi = ep * (1.0 + 2.0 * s * dpsi)
        ddphi = r * ep * (6.0 * dpsi + 4.0 * s * dpsi * dpsi + 4.0 * s * ddpsi)
        S0 = scal[9]
        E = _clenshaw(cheb, 2.0 * s / S0 - 1.0)
        I = r ** (k + 1.0) * E
        return phi, dphi, ddphi, I
    if r <= r1:
        u = r - r1
        m = n - 1.0
        w = 1.0 - u * u
        a = math.asin(u)
        phi = math.exp((m / k) * H * a) * w ** (-0.5 / k)
        L1 = (m / k) * H / math.sqrt(w) + u / (k * w)
        dL1 = (m / k) * H * u / w ** 1.5 + (1.0 + u * u) / (k * w * w)
        e0 = math.asin(r0 - r1)
        # offset form avoids cancellation as r -> r1 (the offset is ~0 by construction)
        I = math.exp(m * H * a) / (m * H) + (scal[6] - math.exp(m * H * e0) / (m * H))
        return phi, phi * L1, phi * (L1 * L1 + dL1), I
    if r < r2:
        t = r - r1
        phi = _horner(blend, t)
        dphi = _horner([i * blend[i] for i in range(1, len(blend))], t)
        ddphi = _horner([i * (i - 1) * blend[i] for i in range(2, len(blend))], t)
        I = scal[7] + _horner(blendI, t)
        return phi, dphi, ddphi, I
    c = scal[5]
    return c, 0.0, 0.0, scal[8] + c ** k * (r - r2)


def profile_eval(scal, cap, cheb, blend, blendI, r):
    """Vectorised evaluation; returns four arrays ``phi, dphi, ddphi, I``."""
    r = np.asarray(r, dtype=float)
    out = np.empty((4,) + r.shape)
    flat = r.ravel()
    res = out.reshape(4, -1)
    for i, ri in enumerate(flat):
        res[:, i] = phi_scalar(scal, cap, cheb, blend, blendI, float(ri))
    return out[0], out[1], out[2], out[3]


def _rhs(scal, cap, cheb, blend, blendI, mH, k, r, sig):
    phi, dphi, _, _ = phi_scalar(scal, cap, cheb, blend, blendI, r)
    sn = math.sin(sig)
    return math.cos(sig), sn, mH - k * (dphi / phi) * sn


def _first_integral(scal, cap, cheb, blend, blendI, mH, k, r, sig):
    phi, _, _, I = phi_scalar(scal, cap, cheb, blend, blendI, r)
    return phi ** k * math.sin(sig) - mH * I


def _rk_step(args, mH, k, y, h, k1):
    """One Dormand-Prince step; returns (y5, err_vec, k7) or None if r <= 0."""
    ks = [k1]
    for i in range(1, 7):
        a = _A[i]
        yi = [y[j] + h * sum(a[m] * ks[m][j] for m in range(i)) for j in range(3)]
        if yi[0] <= 0.0:
            return None
        ks.append(_rhs(*args, mH, k, yi[0], yi[2]))
    y5 = [y[j] + h * sum(_B[m] * ks[m][j] for m in range(7)) for j in range(3)]
    err = [h * sum(_E[m] * ks[m][j] for m in range(7)) for j in range(3)]
    return y5, err, ks[6]


def _event_values(y, r_below, r_above, z_above, r_junction=0.0):
    return (y[0] - r_below, r_above - y[0], z_above - y[1], math.cos(y[2]),
            y[0] - r_junction)


def _locate(args, mH, k, y, h, k1, idx, r_below, r_above, z_above, g0, g1,
            r_junction=0.0):
    """Find theta in (0, 1] where event ``idx`` changes sign (Illinois).

    Index 4 is the crossing of the profile junction radius ``r_junction``.
    """
    lo, hi = 0.0, 1.0
    glo, ghi = g0, g1
    best = None
    side = 0
    for _ in range(60):
        th = hi - ghi * (hi - lo) / (ghi - glo) if ghi != glo else 0.5 * (lo + hi)
        if not (lo < th < hi):
            th = 0.5 * (lo + hi)
        st = _rk_step(args, mH, k, y, th * h, k1)
        if st is None:
            hi = th
            continue
        g = _event_values(st[0], r_below, r_above, z_above, r_junction)[idx]
        best = (th, st[0])
        if abs(g) < 1e-14 or (hi - lo) < 1e-15:
            break
        if (g > 0) == (glo > 0):
            lo, glo = th, g
            if side == -1:
                ghi *= 0.5
            side = -1
        else:
            hi, ghi = th, g
            if side == 1:
                glo *= 0.5
            side = 1
    if best is None:
        st = _rk_step(args, mH, k, y, hi * h, k1)
        best = (hi, st[0])
    return best


def integrate_profile(scal, cap, cheb, blend, blendI, H, r_init, sigma_init,
                      max_s, r_below, r_above, z_above, stop_vertical,
                      rtol, atol, max_steps):
    """Adaptive Dormand-Prince integration of the profile-curve system.

    Height is integrated relative to the start.  Returns
    ``(s, r, zeta, sigma, J, stop_code)``.
    """
    args = (scal, cap, cheb, blend, blendI)
    n = scal[0]
    k = n - 2.0
    mH = (n - 1.0) * H
    y = [r_init, 0.0, sigma_init]
    s = 0.0
    S = [0.0]
    R = [r_init]
    Z = [0.0]
    SG = [sigma_init]
    JJ = [_first_integral(*args, mH, k, r_init, sigma_init)]
    k1 = _rhs(*args, mH, k, y[0], y[2])
    h = min(1e-3, max_s) if max_s > 0 else 0.0
    err_prev = 1e-4
    code = STOP_MAX_S
    nsteps = 0
    if max_s <= 0.0:
        return (np.array(S), np.array(R), np.array(Z), np.array(SG),
                np.array(JJ), STOP_MAX_S)
    while True:
        if nsteps >= max_steps:
            code = STOP_MAX_STEPS
            break
        if h < 1e-14 * (1.0 + s):
            code = STOP_AXIS if y[0] < 1e-3 else STOP_UNDERFLOW
            break
        last = False
        if s + h >= max_s:
            h = max_s - s
            last = True
        st = _rk_step(args, mH, k, y, h, k1)
        if st is None:
            h *= 0.25
            continue
        ynew, errv, k7 = st
        e2 = 0.0
        for j in range(3):
            if j == 2:
                sc = atol + rtol
            else:
                sc = atol + rtol * max(abs(y[j]), abs(ynew[j]))
            e2 = max(e2, abs(errv[j]) / sc)
        err = e2
        if err > 1.0:
            h *= max(0.2, 0.9 * err ** -0.2)
            continue
        nsteps += 1
        # events, earliest theta wins, ties by priority order
        g0 = _event_values(y, r_below, r_above, z_above)
        g1 = _event_values(ynew, r_below, r_above, z_above)
        hit = None
        for idx, ecode in ((0, STOP_AXIS), (1, STOP_R_ABOVE), (2, STOP_Z_ABOVE),
                           (3, STOP_VERTICAL)):
            if idx == 3:
                if not stop_vertical or not (g0[3] * g1[3] < 0.0 or
                                             (g1[3] == 0.0 and g0[3] != 0.0)):
                    continue
            elif not (g1[idx] <= 0.0 < g0[idx]):
                continue
            th, yst = _locate(args, mH, k, y, h, k1, idx, r_below, r_above,
                              z_above, g0[idx], g1[idx])
            if hit is None or th < hit[0]:
                hit = (th, yst, ecode)
        # land on profile junctions: the right-hand side is only C^1 there
        for rj in (scal[2], scal[3], scal[4]):
            a0 = y[0] - rj
            a1 = ynew[0] - rj
            if a0 * a1 < 0.0 and abs(a0) > 1e-12:
                th, yst = _locate(args, mH, k, y, h, k1, 4, r_below, r_above,
                                  z_above, a0, a1, rj)
                if hit is None or th < hit[0]:
                    hit = (th, yst, -1)
        if hit is not None and hit[2] == -1:
            th, yst, _ = hit
            s = s + th * h
            y = yst
            k1 = _rhs(*args, mH, k, y[0], y[2])
            S.append(s)
            R.append(y[0])
            Z.append(y[1])
            SG.append(y[2])
            JJ.append(_first_integral(*args, mH, k, y[0], y[2]))
            continue
        if hit is not None:
            th, yst, code = hit
            s = s + th * h
            y = yst
            S.append(s)
            R.append(y[0])
            Z.append(y[1])
            SG.append(y[2])
            JJ.append(_first_integral(*args, mH, k, y[0], y[2]))
            break
        s = max_s if last else s + h
        y = ynew
        k1 = k7
        S.append(s)
        R.append(y[0])
        Z.append(y[1])
        SG.append(y[2])
        JJ.append(_first_integral(*args, mH, k, y[0], y[2]))
        if last:
            code = STOP_MAX_S
            break
        err = max(err, 1e-10)
        fac = 0.9 * err ** (-0.7 / 5) * err_prev ** (0.4 / 5)
        h *= min(5.0, max(0.2, fac))
        err_prev = err
    return (np.array(S), np.array(R), np.array(Z), np.array(SG), np.array(JJ),
            code)
