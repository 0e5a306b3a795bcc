"""Compiled inner loops for the time-stepping engines.

Everything here is numba-jitted and operates on flat float64 arrays; the
public integrator API wraps these kernels.  Status codes returned by the
loops:

    0  finished
    1  non-finite state detected (blow-up); aborted
    2  record buffer full (adaptive loop only); caller resizes and resumes
    3  step size underflow (adaptive loop only)

Numerics are plain IEEE (no fastmath) so repeated runs are bit-identical.
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

# Model parameter packing used by all kernels:
#   pbase = [a0, a1, a2, g_K, E_Na, E_K, H, lam, tau_K, J, P]
#   pmem  = [k, beta, b]           (zeros for the classical model)
#   gam   = gamma_i drive weights  (length 0 for the classical model)


@njit(cache=True)
def rhs_core(y, out, n, pbase, mem, pmem, gam):
    a0 = pbase[0]
    a1 = pbase[1]
    a2 = pbase[2]
    g_K = pbase[3]
    E_Na = pbase[4]
    E_K = pbase[5]
    H = pbase[6]
    lam = pbase[7]
    tau_K = pbase[8]
    J = pbase[9]
    P = pbase[10]

    vsum = 0.0
    for i in range(n):
        vsum += y[i]

    kpsi = 0.0
    if mem:
        rho = y[2 * n]
        kpsi = pmem[0] * rho * (1.0 - pmem[1] * rho)

    for i in range(n):
        V = y[i]
        R = y[n + i]
        m = a0 + V * (a1 + a2 * V)
        x = lam * (V - E_K)
        if x >= 0.0:
            s = 1.0 / (1.0 + math.exp(-x))
        else:
            ex = math.exp(x)
            s = ex / (1.0 + ex)
        dv = -m * (V - E_Na) - g_K * R * (V - E_K) + J + P * (vsum - n * V)
        if mem:
            dv += kpsi * V
        out[i] = dv
        out[n + i] = (H * s - R) / tau_K

    if mem:
        acc = 0.0
        for i in range(n):
            acc += gam[i] * y[i]
        out[2 * n] = acc - pmem[2] * y[2 * n]


@njit(cache=True)
def _all_finite(y):
    for d in range(y.size):
        if not math.isfinite(y[d]):
            return False
    return True


@njit(cache=True)
def rk4_fixed(y, dt, n_steps, stride, rec_t, rec_y, n, pbase, mem, pmem, gam):
    """Classical 4th-order fixed-step loop.  y is advanced in place.

    Returns (status, steps_done, records_written).
    """
    dim = y.size
    k1 = np.empty(dim)
    k2 = np.empty(dim)
    k3 = np.empty(dim)
    k4 = np.empty(dim)
    yt = np.empty(dim)
    yprev = np.empty(dim)

    rec_t[0] = 0.0
    for d in range(dim):
        rec_y[0, d] = y[d]
    rec_i = 1

    for step in range(n_steps):
        for d in range(dim):
            yprev[d] = y[d]
        rhs_core(y, k1, n, pbase, mem, pmem, gam)
        for d in range(dim):
            yt[d] = y[d] + 0.5 * dt * k1[d]
        rhs_core(yt, k2, n, pbase, mem, pmem, gam)
        for d in range(dim):
            yt[d] = y[d] + 0.5 * dt * k2[d]
        rhs_core(yt, k3, n, pbase, mem, pmem, gam)
        for d in range(dim):
            yt[d] = y[d] + dt * k3[d]
        rhs_core(yt, k4, n, pbase, mem, pmem, gam)
        for d in range(dim):
            y[d] += dt * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]) / 6.0

        if not _all_finite(y):
            for d in range(dim):
                y[d] = yprev[d]
            return 1, step, rec_i

        k = step + 1
        if k % stride == 0 or k == n_steps:
            rec_t[rec_i] = k * dt
            for d in range(dim):
                rec_y[rec_i, d] = y[d]
            rec_i += 1

    return 0, n_steps, rec_i


# Fehlberg 4(5) embedded pair; the 4th-order solution is propagated and the
# difference to the 5th-order one drives the step controller.
_RKF_C = np.array([0.0, 0.25, 3.0 / 8.0, 12.0 / 13.0, 1.0, 0.5])
_RKF_B4 = np.array([25.0 / 216.0, 0.0, 1408.0 / 2565.0, 2197.0 / 4104.0, -0.2, 0.0])
_RKF_E = np.array(
    [1.0 / 360.0, 0.0, -128.0 / 4275.0, -2197.0 / 75240.0, 1.0 / 50.0, 2.0 / 55.0]
)
_RKF_A = np.array(
    [
        [0.0, 0.0, 0.0, 0.0, 0.0],
        [0.25, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 32.0, 9.0 / 32.0, 0.0, 0.0, 0.0],
        [1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0, 0.0, 0.0],
        [439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0, 0.0],
        [-8.0 / 27.0, 2.0, -3554.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0],
    ]
)


@njit(cache=True)
def rkf45_adaptive(
    y,
    t_start,
    t_end,
    h_init,
    abs_tol,
    rel_tol,
    stride,
    step_count_start,
    rec_t,
    rec_y,
    n,
    pbase,
    mem,
    pmem,
    gam,
):
    """Embedded 4(5) adaptive loop from t_start to t_end.

    Records every stride-th accepted step into (rec_t, rec_y) starting at
    row 0; the caller seeds the t=0 record itself.  Returns
    (status, t_reached, h_next, records_written, accepted_steps_total).
    """
    dim = y.size
    ks = np.empty((6, dim))
    yt = np.empty(dim)
    ynew = np.empty(dim)

    cap = rec_t.size
    rec_i = 0
    t = t_start
    h = h_init
    accepted = step_count_start
    h_min = 1e-14 * max(1.0, abs(t_end))

    while t < t_end:
        if h < h_min:
            return 3, t, h, rec_i, accepted
        if t + h > t_end:
            h = t_end - t

        rhs_core(y, ks[0], n, pbase, mem, pmem, gam)
        for s in range(1, 6):
            for d in range(dim):
                acc = 0.0
                for j in range(s):
                    acc += _RKF_A[s, j] * ks[j, d]
                yt[d] = y[d] + h * acc
            rhs_core(yt, ks[s], n, pbase, mem, pmem, gam)

        err_sq = 0.0
        for d in range(dim):
            acc4 = 0.0
            eacc = 0.0
            for s in range(6):
                acc4 += _RKF_B4[s] * ks[s, d]
                eacc += _RKF_E[s] * ks[s, d]
            ynew[d] = y[d] + h * acc4
            scale = abs_tol + rel_tol * max(abs(y[d]), abs(ynew[d]))
            e = h * eacc / scale
            err_sq += e * e
        enorm = math.sqrt(err_sq / dim)
        # a step that overflows produces an infinite error scale and a
        # deceptively tiny error ratio; treat any non-finite stage result
        # as a hard rejection instead
        bad = (not math.isfinite(enorm)) or (not _all_finite(ynew))

        if (not bad) and enorm <= 1.0:
            t += h
            for d in range(dim):
                y[d] = ynew[d]
            accepted += 1
            if accepted % stride == 0 or t >= t_end:
                if rec_i >= cap:
                    return 2, t, h, rec_i, accepted
                rec_t[rec_i] = t
                for d in range(dim):
                    rec_y[rec_i, d] = y[d]
                rec_i += 1

        if bad:
            factor = 0.2
        elif enorm == 0.0:
            factor = 5.0
        else:
            factor = 0.9 * enorm ** (-0.2)
            if factor > 5.0:
                factor = 5.0
            elif factor < 0.2:
                factor = 0.2
        h *= factor

    return 0, t, h, rec_i, accepted


@njit(cache=True)
def caputo_pece(
    y0,
    dt,
    n_steps,
    stride,
    sweeps,
    win_steps,
    c,
    e,
    a0w,
    g1,
    g2,
    rec_t,
    rec_y,
    n,
    pbase,
    mem,
    pmem,
    gam,
):
    """Adams-type fractional predictor-corrector on a uniform grid.

    Predictor: fractional rectangle rule with weights c[m] = (m+1)^a - m^a,
    scaled by g1 = dt^a / Gamma(a+1).  Corrector: fractional trapezoid
    weights (a0w for the oldest node, e[m] interior, 1 for the new node),
    scaled by g2 = dt^a / Gamma(a+2), swept `sweeps` times.  win_steps < 0
    disables the short-memory truncation.

    The O(N^2) history convolution below is the hot spot; it runs as a
    tight accumulation over the contiguous rows of F.

    Returns (status, steps_done, records_written).
    """
    dim = y0.size
    F = np.empty((n_steps + 1, dim))
    y = np.empty(dim)
    yp = np.empty(dim)
    fnew = np.empty(dim)
    acc_p = np.empty(dim)
    acc_c = np.empty(dim)

    for d in range(dim):
        y[d] = y0[d]
    rhs_core(y, F[0], n, pbase, mem, pmem, gam)

    rec_t[0] = 0.0
    for d in range(dim):
        rec_y[0, d] = y[d]
    rec_i = 1

    for k in range(n_steps):
        j0 = 0
        if win_steps >= 0:
            j0 = k + 1 - win_steps
            if j0 < 0:
                j0 = 0

        for d in range(dim):
            acc_p[d] = 0.0
            acc_c[d] = 0.0
        if j0 == 0:
            w0 = a0w[k]
            for d in range(dim):
                acc_c[d] = w0 * F[0, d]
        start = j0 if j0 > 0 else 1
        for j in range(j0, k + 1):
            wp = c[k - j]
            for d in range(dim):
                acc_p[d] += wp * F[j, d]
        for j in range(start, k + 1):
            wc = e[k - j]
            for d in range(dim):
                acc_c[d] += wc * F[j, d]

        for d in range(dim):
            yp[d] = y0[d] + g1 * acc_p[d]
        rhs_core(yp, fnew, n, pbase, mem, pmem, gam)

        for _ in range(sweeps):
            for d in range(dim):
                y[d] = y0[d] + g2 * (acc_c[d] + fnew[d])
            rhs_core(y, fnew, n, pbase, mem, pmem, gam)

        for d in range(dim):
            F[k + 1, d] = fnew[d]

        if not _all_finite(y):
            return 1, k, rec_i

        kk = k + 1
        if kk % stride == 0 or kk == n_steps:
            rec_t[rec_i] = kk * dt
            for d in range(dim):
                rec_y[rec_i, d] = y[d]
            rec_i += 1

    return 0, n_steps, rec_i
