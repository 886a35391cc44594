"""Compiled Dormand-Prince 5(4) stepper with PI control and event location.

Two state layouts are supported:

    mode 0  (S, I, T, P, Y)
    mode 1  (S, T, P, z, q)   z = log(I + Y), q = I / (I + Y)

Mode 1 keeps the infected compartments representable when they sink far
below the smallest double between epidemics.
"""

import numpy as np
from numba import njit

DIRECT = 0
LOGINF = 1

OK = 0
STEP_UNDERFLOW = 1
TOO_MANY_STEPS = 2
NONFINITE = 3

EV_UP = 0
EV_DOWN = 1
EV_PEAK_I = 2
EV_PEAK_Y = 3

# Dormand-Prince coefficients
C2, C3, C4, C5 = 0.2, 0.3, 0.8, 8.0 / 9.0
A21 = 0.2
A31, A32 = 3.0 / 40.0, 9.0 / 40.0
A41, A42, A43 = 44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0
A51, A52, A53, A54 = 19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0
A61, A62, A63, A64, A65 = (
    9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0
)
B1, B3, B4, B5, B6 = 35.0 / 384.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0
E1, E3, E4, E5, E6, E7 = (
    71.0 / 57600.0, -71.0 / 16695.0, 71.0 / 1920.0, -17253.0 / 339200.0, 22.0 / 525.0, -1.0 / 40.0
)

PI_ALPHA = 0.7 / 5.0
PI_BETA = 0.4 / 5.0
SAFETY = 0.9
FAC_MIN = 0.2
FAC_MAX = 10.0


@njit(cache=True, nogil=True)
def rhs(mode, y, p, out):
    b, al, nu, g1, g2, d, e = p[0], p[1], p[2], p[3], p[4], p[5], p[6]
    de = d * e
    if mode == DIRECT:
        S, I, T, P, Y = y[0], y[1], y[2], y[3], y[4]
        force = I + al * Y
        out[0] = -b * S * force + de * P
        out[1] = b * S * force - g1 * I
        out[2] = g1 * I - e * T
        out[3] = de + e * T * (1.0 - d) - nu * b * P * force - de * (S + I + 2.0 * P + Y)
        out[4] = nu * b * P * force - g2 * Y
    else:
        S, T, P, z, q = y[0], y[1], y[2], y[3], y[4]
        F = q + al * (1.0 - q)
        E = np.exp(z)
        zp = b * F * (S + nu * P) - g1 * q - g2 * (1.0 - q)
        out[0] = -b * S * E * F + de * P
        out[1] = g1 * q * E - e * T
        out[2] = de + e * T * (1.0 - d) - nu * b * P * E * F - de * (S + E + 2.0 * P)
        out[3] = zp
        out[4] = b * S * F - g1 * q - q * zp


@njit(cache=True, nogil=True)
def infection_level(mode, y, p):
    """I + alpha * Y."""
    if mode == DIRECT:
        return y[1] + p[1] * y[4]
    q = y[4]
    return np.exp(y[3]) * (q + p[1] * (1.0 - q))


@njit(cache=True, nogil=True)
def event_values(mode, y, p, log_thr, out):
    # out[:k] threshold functions, out[k] ~ dI/dt, out[k+1] ~ dY/dt (positive factors dropped)
    b, al, nu, g1, g2 = p[0], p[1], p[2], p[3], p[4]
    k = log_thr.shape[0]
    if mode == DIRECT:
        S, I, P, Y = y[0], y[1], y[3], y[4]
        force = I + al * Y
        for j in range(k):
            out[j] = force - np.exp(log_thr[j])
        out[k] = b * S * force - g1 * I
        out[k + 1] = nu * b * P * force - g2 * Y
    else:
        S, P, z, q = y[0], y[2], y[3], y[4]
        F = q + al * (1.0 - q)
        lf = np.log(F) if F > 0.0 else -745.0
        for j in range(k):
            out[j] = z + lf - log_thr[j]
        out[k] = b * S * F - g1 * q
        out[k + 1] = nu * b * P * F - g2 * (1.0 - q)


@njit(cache=True, nogil=True)
def hermite(y0, f0, y1, f1, h, theta, out):
    t2 = theta * theta
    t3 = t2 * theta
    h00 = 2.0 * t3 - 3.0 * t2 + 1.0
    h10 = t3 - 2.0 * t2 + theta
    h01 = -2.0 * t3 + 3.0 * t2
    h11 = t3 - t2
    for i in range(y0.shape[0]):
        out[i] = h00 * y0[i] + h10 * h * f0[i] + h01 * y1[i] + h11 * h * f1[i]


@njit(cache=True, nogil=True)
def _sign(x):
    if x > 0.0:
        return 1
    if x < 0.0:
        return -1
    return 0


@njit(cache=True, nogil=True)
def _grow2(a, n):
    out = np.empty((2 * a.shape[0] + 1, a.shape[1]))
    out[:n] = a[:n]
    return out


@njit(cache=True, nogil=True)
def _grow1(a, n):
    out = np.empty(2 * a.shape[0] + 1, dtype=a.dtype)
    out[:n] = a[:n]
    return out


@njit(cache=True, nogil=True)
def _initial_step(mode, t0, y0, f0, p, rtol, atol, t_end, max_step):
    n = y0.shape[0]
    d0 = 0.0
    d1 = 0.0
    for i in range(n):
        sc = atol + rtol * abs(y0[i])
        d0 += (y0[i] / sc) ** 2
        d1 += (f0[i] / sc) ** 2
    d0 = np.sqrt(d0 / n)
    d1 = np.sqrt(d1 / n)
    h0 = 1e-6 if (d0 < 1e-5 or d1 < 1e-5) else 0.01 * d0 / d1
    h0 = min(h0, t_end - t0, max_step)
    y1 = y0 + h0 * f0
    f1 = np.empty(n)
    rhs(mode, y1, p, f1)
    d2 = 0.0
    for i in range(n):
        sc = atol + rtol * abs(y0[i])
        d2 += ((f1[i] - f0[i]) / sc) ** 2
    d2 = np.sqrt(d2 / n) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** 0.2
    return min(100.0 * h0, h1, t_end - t0, max_step)


@njit(cache=True, nogil=True)
def integrate_kernel(mode, y_init, t0, t_end, p, rtol, atol, max_step, log_thr,
                     t_eval, store_steps, max_steps):
    n = y_init.shape[0]
    k = log_thr.shape[0]
    ng = k + 2
    min_thr = np.exp(log_thr.min()) if k > 0 else 0.0
    eps = np.finfo(np.float64).eps

    cap = 1024
    ts = np.empty(cap)
    ys = np.empty((cap, n))
    nout = 0
    ecap = 64
    ev_t = np.empty(ecap)
    ev_kind = np.empty(ecap, dtype=np.int64)
    ev_idx = np.empty(ecap, dtype=np.int64)
    ev_y = np.empty((ecap, n))
    nev = 0

    y = y_init.copy()
    t = t0
    f = np.empty(n)
    rhs(mode, y, p, f)
    g_old = np.empty(ng)
    g_new = np.empty(ng)
    g_mid = np.empty(ng)
    event_values(mode, y, p, log_thr, g_old)
    memory = np.empty(ng, dtype=np.int64)
    for j in range(ng):
        memory[j] = _sign(g_old[j])

    ie = 0
    if t_eval.shape[0] > 0:
        while ie < t_eval.shape[0] and t_eval[ie] <= t0:
            ts[nout] = t_eval[ie]
            ys[nout] = y
            nout += 1
            ie += 1
    else:
        ts[0] = t0
        ys[0] = y
        nout = 1

    k2 = np.empty(n)
    k3 = np.empty(n)
    k4 = np.empty(n)
    k5 = np.empty(n)
    k6 = np.empty(n)
    k7 = np.empty(n)
    ytmp = np.empty(n)
    ynew = np.empty(n)
    yint = np.empty(n)

    status = OK
    steps = 0
    if t_end <= t0:
        return status, t, ts[:nout], ys[:nout], ev_t[:0], ev_kind[:0], ev_idx[:0], ev_y[:0], 0

    h = _initial_step(mode, t0, y, f, p, rtol, atol, t_end, max_step)
    err_prev = 1e-4
    rejected = False

    while t < t_end:
        if steps >= max_steps:
            status = TOO_MANY_STEPS
            break
        if h < 10.0 * eps * max(abs(t), 1.0):
            status = STEP_UNDERFLOW
            break
        last = False
        if t + h >= t_end:
            h = t_end - t
            last = True

        for i in range(n):
            ytmp[i] = y[i] + h * A21 * f[i]
        rhs(mode, ytmp, p, k2)
        for i in range(n):
            ytmp[i] = y[i] + h * (A31 * f[i] + A32 * k2[i])
        rhs(mode, ytmp, p, k3)
        for i in range(n):
            ytmp[i] = y[i] + h * (A41 * f[i] + A42 * k2[i] + A43 * k3[i])
        rhs(mode, ytmp, p, k4)
        for i in range(n):
            ytmp[i] = y[i] + h * (A51 * f[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i])
        rhs(mode, ytmp, p, k5)
        for i in range(n):
            ytmp[i] = y[i] + h * (A61 * f[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i])
        rhs(mode, ytmp, p, k6)
        for i in range(n):
            ynew[i] = y[i] + h * (B1 * f[i] + B3 * k3[i] + B4 * k4[i] + B5 * k5[i] + B6 * k6[i])
        rhs(mode, ynew, p, k7)

        err = 0.0
        finite = True
        for i in range(n):
            if not np.isfinite(ynew[i]):
                finite = False
            sc = atol + rtol * max(abs(y[i]), abs(ynew[i]))
            e = h * (E1 * f[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i])
            err += (e / sc) ** 2
        err = np.sqrt(err / n)
        if not finite or not np.isfinite(err):
            # treat as a hard rejection and shrink
            h *= FAC_MIN
            rejected = True
            if h < 10.0 * eps * max(abs(t), 1.0):
                status = NONFINITE
                break
            continue

        if err > 1.0:
            fac = max(FAC_MIN, SAFETY * err ** (-1.0 / 5.0))
            h *= fac
            rejected = True
            continue

        # accepted
        steps += 1
        t_new = t_end if last else t + h

        event_values(mode, ynew, p, log_thr, g_new)
        for j in range(ng):
            s_new = _sign(g_new[j])
            if s_new == 0 or s_new == memory[j]:
                continue
            if memory[j] == 0:
                memory[j] = s_new
                continue
            kind = -1
            if j < k:
                kind = EV_UP if s_new > 0 else EV_DOWN
            elif s_new < 0:
                kind = EV_PEAK_I if j == k else EV_PEAK_Y
            memory[j] = s_new
            if kind < 0:
                continue
            # bisection on the Hermite interpolant
            lo = 0.0
            hi = 1.0
            tol = max(1e-10, 4.0 * eps * abs(t_new)) / h
            for _ in range(200):
                if hi - lo <= tol:
                    break
                mid = 0.5 * (lo + hi)
                hermite(y, f, ynew, k7, h, mid, yint)
                event_values(mode, yint, p, log_thr, g_mid)
                if _sign(g_mid[j]) == s_new:
                    hi = mid
                else:
                    lo = mid
            hermite(y, f, ynew, k7, h, hi, yint)
            if kind >= EV_PEAK_I and infection_level(mode, yint, p) < min_thr:
                continue
            if nev >= ev_t.shape[0]:
                ev_t = _grow1(ev_t, nev)
                ev_kind = _grow1(ev_kind, nev)
                ev_idx = _grow1(ev_idx, nev)
                ev_y = _grow2(ev_y, nev)
            ev_t[nev] = t + hi * h
            ev_kind[nev] = kind
            ev_idx[nev] = j if j < k else -1
            ev_y[nev] = yint
            nev += 1

        if t_eval.shape[0] > 0:
            while ie < t_eval.shape[0] and t_eval[ie] <= t_new:
                if nout >= ts.shape[0]:
                    ts = _grow1(ts, nout)
                    ys = _grow2(ys, nout)
                theta = (t_eval[ie] - t) / h
                if theta >= 1.0:
                    yint[:] = ynew
                else:
                    hermite(y, f, ynew, k7, h, theta, yint)
                ts[nout] = t_eval[ie]
                ys[nout] = yint
                nout += 1
                ie += 1
        elif store_steps or last:
            if nout >= ts.shape[0]:
                ts = _grow1(ts, nout)
                ys = _grow2(ys, nout)
            ts[nout] = t_new
            ys[nout] = ynew
            nout += 1

        t = t_new
        y[:] = ynew
        f[:] = k7

        fac = SAFETY * err ** (-PI_ALPHA) * err_prev ** PI_BETA if err > 0.0 else FAC_MAX
        fac = min(FAC_MAX, max(FAC_MIN, fac))
        if rejected:
            fac = min(fac, 1.0)
        h = min(h * fac, max_step)
        err_prev = max(err, 1e-4)
        rejected = False

    return status, t, ts[:nout], ys[:nout], ev_t[:nev], ev_kind[:nev], ev_idx[:nev], ev_y[:nev], steps
