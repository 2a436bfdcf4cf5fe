# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled profile evaluation and Dormand-Prince integration.

Same interface and arithmetic as ``_kernels_py``.
"""
import numpy as np
cimport numpy as cnp
from libc.math cimport sin, cos, exp, sqrt, asin, pow, fabs

cnp.import_array()

cdef int STOP_MAX_S = 0
cdef int STOP_AXIS = 1
cdef int STOP_R_ABOVE = 2
cdef int STOP_Z_ABOVE = 3
cdef int STOP_VERTICAL = 4
cdef int STOP_UNDERFLOW = 5
cdef int STOP_MAX_STEPS = 6

cdef double DP_A[7][6]
cdef double DP_B[7]
cdef double DP_E[7]

DP_A[1][:] = [1. / 5, 0, 0, 0, 0, 0]
DP_A[2][:] = [3. / 40, 9. / 40, 0, 0, 0, 0]
DP_A[3][:] = [44. / 45, -56. / 15, 32. / 9, 0, 0, 0]
DP_A[4][:] = [19372. / 6561, -25360. / 2187, 64448. / 6561, -212. / 729, 0, 0]
DP_A[5][:] = [9017. / 3168, -355. / 33, 46732. / 5247, 49. / 176, -5103. / 18656, 0]
DP_A[6][:] = [35. / 384, 0., 500. / 1113, 125. / 192, -2187. / 6784, 11. / 84]
DP_B[:] = [35. / 384, 0., 500. / 1113, 125. / 192, -2187. / 6784, 11. / 84, 0.]
DP_E[:] = [71. / 57600, 0., -71. / 16695, 71. / 1920, -17253. / 339200,
           22. / 525, -1. / 40]


cdef struct Prof:
    const double* scal
    const double* cap
    const double* cheb
    int ncheb
    const double* blend
    int nblend
    const double* blendI
    int nblendI


cdef inline double _horner(const double* c, int n, double x) nogil:
    cdef double acc = 0.0
    cdef int i
    for i in range(n - 1, -1, -1):
        acc = acc * x + c[i]
    return acc


cdef inline double _clenshaw(const double* c, int n, double x) nogil:
    cdef double b1 = 0.0, b2 = 0.0, t
    cdef int i
    for i in range(n - 1, 0, -1):
        t = 2.0 * x * b1 - b2 + c[i]
        b2 = b1
        b1 = t
    return x * b1 - b2 + c[0]


cdef void _phi(const Prof* P, double r, double* out) nogil:
    cdef const double* scal = P.scal
    cdef const double* cap = P.cap
    cdef double n = scal[0], H = scal[1], r0 = scal[2], r1 = scal[3], r2 = scal[4]
    cdef double k = n - 2.0, m = n - 1.0
    cdef double s, psi, dpsi, ddpsi, ep, u, w, a, L1, dL1, phi, t, acc, acc1, acc2
    cdef int i
    if r <= r0:
        s = r * r
        psi = s * (cap[0] + s * (cap[1] + s * (cap[2] + s * cap[3])))
        dpsi = cap[0] + s * (2 * cap[1] + s * (3 * cap[2] + s * 4 * cap[3]))
        ddpsi = 2 * cap[1] + s * (6 * cap[2] + s * 12 * cap[3])
        ep = exp(psi)
        out[0] = r * ep
        out[1] = ep * (1.0 + 2.0 * s * dpsi)
        out[2] = r * ep * (6.0 * dpsi + 4.0 * s * dpsi * dpsi + 4.0 * s * ddpsi)
        out[3] = pow(r, k + 1.0) * _clenshaw(P.cheb, P.ncheb, 2.0 * s / scal[9] - 1.0)
        return
    if r <= r1:
        u = r - r1
        w = 1.0 - u * u
        a = asin(u)
        phi = exp((m / k) * H * a) * pow(w, -0.5 / k)
        L1 = (m / k) * H / sqrt(w) + u / (k * w)
        dL1 = (m / k) * H * u / pow(w, 1.5) + (1.0 + u * u) / (k * w * w)
        out[0] = phi
        out[1] = phi * L1
        out[2] = phi * (L1 * L1 + dL1)
        # offset form avoids cancellation as r -> r1 (the offset is ~0 by construction)
        out[3] = exp(m * H * a) / (m * H) + (scal[6] - exp(m * H * asin(r0 - r1)) / (m * H))
        return
    if r < r2:
        t = r - r1
        out[0] = _horner(P.blend, P.nblend, t)
        acc1 = 0.0
        for i in range(P.nblend - 1, 0, -1):
            acc1 = acc1 * t + i * P.blend[i]
        acc2 = 0.0
        for i in range(P.nblend - 1, 1, -1):
            acc2 = acc2 * t + i * (i - 1) * P.blend[i]
        out[1] = acc1
        out[2] = acc2
        out[3] = scal[7] + _horner(P.blendI, P.nblendI, t)
        return
    out[0] = scal[5]
    out[1] = 0.0
    out[2] = 0.0
    out[3] = scal[8] + pow(scal[5], k) * (r - r2)


cdef inline void _setup(Prof* P, const double[::1] scal, const double[::1] cap,
                        const double[::1] cheb, const double[::1] blend,
                        const double[::1] blendI):
    P.scal = &scal[0]
    P.cap = &cap[0]
    P.cheb = &cheb[0]
    P.ncheb = cheb.shape[0]
    P.blend = &blend[0]
    P.nblend = blend.shape[0]
    P.blendI = &blendI[0]
    P.nblendI = blendI.shape[0]


def phi_scalar(const double[::1] scal, const double[::1] cap, const double[::1] cheb,
               const double[::1] blend, const double[::1] blendI, double r):
    cdef Prof P
    cdef double out[4]
    _setup(&P, scal, cap, cheb, blend, blendI)
    _phi(&P, r, out)
    return out[0], out[1], out[2], out[3]


def profile_eval(const double[::1] scal, const double[::1] cap, const double[::1] cheb,
                 const double[::1] blend, const double[::1] blendI, r):
    """Vectorised evaluation; returns four arrays ``phi, dphi, ddphi, I``."""
    cdef Prof P
    cdef double out[4]
    _setup(&P, scal, cap, cheb, blend, blendI)
    arr = np.ascontiguousarray(r, dtype=np.float64)
    shape = arr.shape
    cdef const double[::1] flat = arr.ravel()
    cdef Py_ssize_t N = flat.shape[0], i
    res = np.empty((4, N))
    cdef double[:, ::1] rv = res
    with nogil:
        for i in range(N):
            _phi(&P, flat[i], out)
            rv[0, i] = out[0]
            rv[1, i] = out[1]
            rv[2, i] = out[2]
            rv[3, i] = out[3]
    res = res.reshape((4,) + shape)
    return res[0], res[1], res[2], res[3]


cdef inline void _rhs(const Prof* P, double mH, double k, const double* y,
                      double* dy) nogil:
    cdef double out[4]
    cdef double sn = sin(y[2])
    _phi(P, y[0], out)
    dy[0] = cos(y[2])
    dy[1] = sn
    dy[2] = mH - k * (out[1] / out[0]) * sn


cdef inline double _J(const Prof* P, double mH, double k, const double* y) nogil:
    cdef double out[4]
    _phi(P, y[0], out)
    return pow(out[0], k) * sin(y[2]) - mH * out[3]


cdef int _rk_step(const Prof* P, double mH, double k, const double* y, double h,
                  double K[7][3], double* y5, double* err) nogil:
    """Stages 2..7 (K[0] given). Returns 0 if a stage has r <= 0."""
    cdef double yi[3]
    cdef double acc
    cdef int i, j, m
    for i in range(1, 7):
        for j in range(3):
            acc = 0.0
            for m in range(i):
                acc = acc + DP_A[i][m] * K[m][j]
            yi[j] = y[j] + h * acc
        if yi[0] <= 0.0:
            return 0
        _rhs(P, mH, k, yi, K[i])
    for j in range(3):
        acc = 0.0
        for m in range(7):
            acc = acc + DP_B[m] * K[m][j]
        y5[j] = y[j] + h * acc
        acc = 0.0
        for m in range(7):
            acc = acc + DP_E[m] * K[m][j]
        err[j] = h * acc
    return 1


cdef inline double _event(int idx, const double* y, double rb, double ra,
                          double za, double rj) nogil:
    if idx == 4:
        return y[0] - rj
    if idx == 0:
        return y[0] - rb
    if idx == 1:
        return ra - y[0]
    if idx == 2:
        return za - y[1]
    return cos(y[2])


cdef double _locate(const Prof* P, double mH, double k, const double* y, double h,
                    double K[7][3], int idx, double rb, double ra, double za,
                    double g0, double g1, double rj, double* ybest) nogil:
    cdef double lo = 0.0, hi = 1.0, glo = g0, ghi = g1, th, g
    cdef double Kt[7][3]
    cdef double y5[3]
    cdef double err[3]
    cdef int it, side = 0, have = 0, j
    cdef double best = -1.0
    for j in range(3):
        Kt[0][j] = K[0][j]
    for it in range(60):
        if ghi != glo:
            th = hi - ghi * (hi - lo) / (ghi - glo)
        else:
            th = 0.5 * (lo + hi)
        if not (lo < th < hi):
            th = 0.5 * (lo + hi)
        if _rk_step(P, mH, k, y, th * h, Kt, y5, err) == 0:
            hi = th
            continue
        g = _event(idx, y5, rb, ra, za, rj)
        best = th
        have = 1
        for j in range(3):
            ybest[j] = y5[j]
        if fabs(g) < 1e-14 or (hi - lo) < 1e-15:
            break
        if (g > 0) == (glo > 0):
            lo = th
            glo = g
            if side == -1:
                ghi *= 0.5
            side = -1
        else:
            hi = th
            ghi = g
            if side == 1:
                glo *= 0.5
            side = 1
    if have == 0:
        _rk_step(P, mH, k, y, hi * h, Kt, ybest, err)
        best = hi
    return best


def integrate_profile(const double[::1] scal, const double[::1] cap,
                      const double[::1] cheb, const double[::1] blend,
                      const double[::1] blendI, double H, double r_init,
                      double sigma_init, double max_s, double r_below,
                      double r_above, double z_above, bint stop_vertical,
                      double rtol, double atol, long max_steps):
    """Adaptive Dormand-Prince integration of the profile-curve system.

    Returns ``(s, r, zeta, sigma, J, stop_code)``.
    """
    cdef Prof P
    _setup(&P, scal, cap, cheb, blend, blendI)
    cdef double n = scal[0]
    cdef double k = n - 2.0
    cdef double mH = (n - 1.0) * H
    cdef double y[3]
    cdef double ynew[3]
    cdef double errv[3]
    cdef double yst[3]
    cdef double yhit[3]
    cdef double K[7][3]
    cdef double a0, a1, rj
    cdef double s = 0.0, h, err, e2, sc, fac, err_prev = 1e-4, th, th_hit
    cdef double g0[4]
    cdef double g1[4]
    cdef int code = STOP_MAX_S, idx, j, hit_code, last
    cdef long nsteps = 0
    cdef Py_ssize_t cap_n = 1024, cnt = 1
    out = np.empty((5, cap_n))
    cdef double[:, ::1] ov = out
    y[0] = r_init
    y[1] = 0.0
    y[2] = sigma_init
    ov[0, 0] = 0.0
    ov[1, 0] = r_init
    ov[2, 0] = 0.0
    ov[3, 0] = sigma_init
    ov[4, 0] = _J(&P, mH, k, y)
    if max_s <= 0.0:
        return (out[0, :1].copy(), out[1, :1].copy(), out[2, :1].copy(),
                out[3, :1].copy(), out[4, :1].copy(), STOP_MAX_S)
    _rhs(&P, mH, k, y, K[0])
    h = 1e-3 if max_s > 1e-3 else max_s
    while True:
        if nsteps >= max_steps:
            code = STOP_MAX_STEPS
            break
        if h < 1e-14 * (1.0 + s):
            code = STOP_AXIS if y[0] < 1e-3 else STOP_UNDERFLOW
            break
        last = 0
        if s + h >= max_s:
            h = max_s - s
            last = 1
        if _rk_step(&P, mH, k, y, h, K, ynew, errv) == 0:
            h *= 0.25
            continue
        e2 = 0.0
        for j in range(3):
            if j == 2:
                sc = atol + rtol
            else:
                sc = atol + rtol * max(fabs(y[j]), fabs(ynew[j]))
            e2 = max(e2, fabs(errv[j]) / sc)
        err = e2
        if err > 1.0:
            h *= max(0.2, 0.9 * pow(err, -0.2))
            continue
        nsteps += 1
        for idx in range(4):
            g0[idx] = _event(idx, y, r_below, r_above, z_above, 0.0)
            g1[idx] = _event(idx, ynew, r_below, r_above, z_above, 0.0)
        hit_code = -1
        th_hit = 2.0
        for idx in range(4):
            if idx == 3:
                if not stop_vertical:
                    continue
                if not (g0[3] * g1[3] < 0.0 or (g1[3] == 0.0 and g0[3] != 0.0)):
                    continue
            elif not (g1[idx] <= 0.0 < g0[idx]):
                continue
            th = _locate(&P, mH, k, y, h, K, idx, r_below, r_above, z_above,
                         g0[idx], g1[idx], 0.0, yst)
            if th < th_hit:
                th_hit = th
                hit_code = (STOP_AXIS, STOP_R_ABOVE, STOP_Z_ABOVE, STOP_VERTICAL)[idx]
                for j in range(3):
                    yhit[j] = yst[j]
        # land on profile junctions: the right-hand side is only C^1 there
        for idx in range(3):
            rj = scal[2 + idx]
            a0 = y[0] - rj
            a1 = ynew[0] - rj
            if a0 * a1 < 0.0 and fabs(a0) > 1e-12:
                th = _locate(&P, mH, k, y, h, K, 4, r_below, r_above, z_above,
                             a0, a1, rj, yst)
                if th < th_hit:
                    th_hit = th
                    hit_code = -2
                    for j in range(3):
                        yhit[j] = yst[j]
        if cnt >= cap_n:
            cap_n *= 2
            out = np.concatenate([out, np.empty((5, cap_n - out.shape[1]))], axis=1)
            ov = out
        if hit_code == -2:
            s = s + th_hit * h
            for j in range(3):
                y[j] = yhit[j]
            _rhs(&P, mH, k, y, K[0])
        elif hit_code >= 0:
            s = s + th_hit * h
            for j in range(3):
                y[j] = yhit[j]
            code = hit_code
        else:
            s = max_s if last else s + h
            for j in range(3):
                y[j] = ynew[j]
                K[0][j] = K[6][j]
        ov[0, cnt] = s
        ov[1, cnt] = y[0]
        ov[2, cnt] = y[1]
        ov[3, cnt] = y[2]
        ov[4, cnt] = _J(&P, mH, k, y)
        cnt += 1
        if hit_code == -2:
            continue
        if hit_code >= 0:
            break
        if last:
            code = STOP_MAX_S
            break
        if err < 1e-10:
            err = 1e-10
        fac = 0.9 * pow(err, -0.7 / 5) * pow(err_prev, 0.4 / 5)
        h *= min(5.0, max(0.2, fac))
        err_prev = err
    return (out[0, :cnt].copy(), out[1, :cnt].copy(), out[2, :cnt].copy(),
            out[3, :cnt].copy(), out[4, :cnt].copy(), code)
