"""Compiled forward-Euler stepping kernels.

These mirror the reaction terms in :mod:`vegtox.model` and advance the
fields in place for a given number of steps.  Zero-flux boundaries are
realized by reflecting ghost cells; for the limit system the cross
diffusion is the plain Laplacian of the product field
``w = (d_R - sigma*theta(T)) R``, whose normal derivative also vanishes on
the boundary, so reflecting ``w`` is exact.

``theta`` is clamped to ``[0, 1]`` here (time steppers may carry toxicity
values a round-off below zero when negative clamping is off).

Each kernel returns ``(step, flat_cell)`` of the first non-finite value,
or ``(-1, -1)`` on success.
"""

import numpy as np
from numba import njit


@njit(cache=True)
def advance_limit_1d(R, T, nsteps, dt, dx, g, gamma, d, s, c, k,
                     d_R, sigma, d_T, R_hat, T_hat, clamp, react, diff):
    n = R.size
    w = np.empty(n)
    lap_w = np.zeros(n)
    lap_T = np.zeros(n)
    inv2 = 1.0 / (dx * dx)
    for step in range(nsteps):
        if diff:
            for i in range(n):
                th = T[i] / T_hat
                if th > 1.0:
                    th = 1.0
                elif th < 0.0:
                    th = 0.0
                w[i] = (d_R - sigma * th) * R[i]
            for i in range(n):
                im = i - 1 if i > 0 else 0
                ip = i + 1 if i < n - 1 else n - 1
                lap_w[i] = (w[im] - 2.0 * w[i] + w[ip]) * inv2
                lap_T[i] = (T[im] - 2.0 * T[i] + T[ip]) * inv2
        bad = -1
        for i in range(n):
            fr = 0.0
            ft = 0.0
            if react:
                th = T[i] / T_hat
                if th > 1.0:
                    th = 1.0
                elif th < 0.0:
                    th = 0.0
                fr = (g - gamma * th) * R[i] * (1.0 - R[i] / R_hat) - (d + s * th) * R[i]
                ft = c * (d + s * th) * R[i] - k * T[i]
            rn = R[i] + dt * (lap_w[i] + fr)
            tn = T[i] + dt * (d_T * lap_T[i] + ft)
            if clamp:
                if rn < 0.0:
                    rn = 0.0
                if tn < 0.0:
                    tn = 0.0
            if not (np.isfinite(rn) and np.isfinite(tn)):
                bad = i
            R[i] = rn
            T[i] = tn
        if bad >= 0:
            return step, bad
    return -1, -1


@njit(cache=True)
def advance_limit_2d(R, T, nsteps, dt, dx, g, gamma, d, s, c, k,
                     d_R, sigma, d_T, R_hat, T_hat, clamp, react, diff):
    ny, nx = R.shape
    w = np.empty((ny, nx))
    lap_w = np.zeros((ny, nx))
    lap_T = np.zeros((ny, nx))
    inv2 = 1.0 / (dx * dx)
    for step in range(nsteps):
        if diff:
            for i in range(ny):
                for j in range(nx):
                    th = T[i, j] / T_hat
                    if th > 1.0:
                        th = 1.0
                    elif th < 0.0:
                        th = 0.0
                    w[i, j] = (d_R - sigma * th) * R[i, j]
            for i in range(ny):
                im = i - 1 if i > 0 else 0
                ip = i + 1 if i < ny - 1 else ny - 1
                for j in range(nx):
                    jm = j - 1 if j > 0 else 0
                    jp = j + 1 if j < nx - 1 else nx - 1
                    lap_w[i, j] = (w[im, j] + w[ip, j] + w[i, jm] + w[i, jp]
                                   - 4.0 * w[i, j]) * inv2
                    lap_T[i, j] = (T[im, j] + T[ip, j] + T[i, jm] + T[i, jp]
                                   - 4.0 * T[i, j]) * inv2
        bad = -1
        for i in range(ny):
            for j in range(nx):
                fr = 0.0
                ft = 0.0
                if react:
                    th = T[i, j] / T_hat
                    if th > 1.0:
                        th = 1.0
                    elif th < 0.0:
                        th = 0.0
                    fr = (g - gamma * th) * R[i, j] * (1.0 - R[i, j] / R_hat) \
                        - (d + s * th) * R[i, j]
                    ft = c * (d + s * th) * R[i, j] - k * T[i, j]
                rn = R[i, j] + dt * (lap_w[i, j] + fr)
                tn = T[i, j] + dt * (d_T * lap_T[i, j] + ft)
                if clamp:
                    if rn < 0.0:
                        rn = 0.0
                    if tn < 0.0:
                        tn = 0.0
                if not (np.isfinite(rn) and np.isfinite(tn)):
                    bad = i * nx + j
                R[i, j] = rn
                T[i, j] = tn
        if bad >= 0:
            return step, bad
    return -1, -1


@njit(cache=True)
def advance_fast_1d(Rh, Re, T, nsteps, dt, dx, g, gamma, d, s, c, k,
                    d_R, sigma, d_T, R_hat, T_hat, eps, implicit,
                    clamp, slow, diff, exchange):
    n = Rh.size
    lap_h = np.zeros(n)
    lap_e = np.zeros(n)
    lap_T = np.zeros(n)
    inv2 = 1.0 / (dx * dx)
    d_e = d_R - sigma
    a = dt / eps
    for step in range(nsteps):
        if diff:
            for i in range(n):
                im = i - 1 if i > 0 else 0
                ip = i + 1 if i < n - 1 else n - 1
                lap_h[i] = d_R * (Rh[im] - 2.0 * Rh[i] + Rh[ip]) * inv2
                lap_e[i] = d_e * (Re[im] - 2.0 * Re[i] + Re[ip]) * inv2
                lap_T[i] = d_T * (T[im] - 2.0 * T[i] + T[ip]) * inv2
        bad = -1
        for i in range(n):
            p = T[i] / T_hat
            if p > 1.0:
                p = 1.0
            elif p < 0.0:
                p = 0.0
            q = 1.0 - p
            Rtot = Rh[i] + Re[i]
            sh = 0.0
            se = 0.0
            ft = 0.0
            if slow:
                crowd = 1.0 - Rtot / R_hat
                sh = g * Rh[i] * crowd - d * Rh[i]
                se = (g - gamma) * Re[i] * crowd - (d + s) * Re[i]
                ft = c * (d * Rtot + s * Re[i]) - k * T[i]
            bh = Rh[i] + dt * (lap_h[i] + sh)
            be = Re[i] + dt * (lap_e[i] + se)
            if exchange:
                if implicit:
                    den = 1.0 + a * (p + q)
                    rhn = ((1.0 + a * q) * bh + a * q * be) / den
                    ren = (a * p * bh + (1.0 + a * p) * be) / den
                else:
                    ex = (p * Rh[i] - q * Re[i]) / eps
                    rhn = bh - dt * ex
                    ren = be + dt * ex
            else:
                rhn = bh
                ren = be
            tn = T[i] + dt * (lap_T[i] + ft)
            if clamp:
                if rhn < 0.0:
                    rhn = 0.0
                if ren < 0.0:
                    ren = 0.0
                if tn < 0.0:
                    tn = 0.0
            if not (np.isfinite(rhn) and np.isfinite(ren) and np.isfinite(tn)):
                bad = i
            Rh[i] = rhn
            Re[i] = ren
            T[i] = tn
        if bad >= 0:
            return step, bad
    return -1, -1


@njit(cache=True)
def advance_fast_2d(Rh, Re, T, nsteps, dt, dx, g, gamma, d, s, c, k,
                    d_R, sigma, d_T, R_hat, T_hat, eps, implicit,
                    clamp, slow, diff, exchange):
    ny, nx = Rh.shape
    lap_h = np.zeros((ny, nx))
    lap_e = np.zeros((ny, nx))
    lap_T = np.zeros((ny, nx))
    inv2 = 1.0 / (dx * dx)
    d_e = d_R - sigma
    a = dt / eps
    for step in range(nsteps):
        if diff:
            for i in range(ny):
                im = i - 1 if i > 0 else 0
                ip = i + 1 if i < ny - 1 else ny - 1
                for j in range(nx):
                    jm = j - 1 if j > 0 else 0
                    jp = j + 1 if j < nx - 1 else nx - 1
                    lap_h[i, j] = d_R * (Rh[im, j] + Rh[ip, j] + Rh[i, jm]
                                         + Rh[i, jp] - 4.0 * Rh[i, j]) * inv2
                    lap_e[i, j] = d_e * (Re[im, j] + Re[ip, j] + Re[i, jm]
                                         + Re[i, jp] - 4.0 * Re[i, j]) * inv2
                    lap_T[i, j] = d_T * (T[im, j] + T[ip, j] + T[i, jm]
                                         + T[i, jp] - 4.0 * T[i, j]) * inv2
        bad = -1
        for i in range(ny):
            for j in range(nx):
                p = T[i, j] / T_hat
                if p > 1.0:
                    p = 1.0
                elif p < 0.0:
                    p = 0.0
                q = 1.0 - p
                Rtot = Rh[i, j] + Re[i, j]
                sh = 0.0
                se = 0.0
                ft = 0.0
                if slow:
                    crowd = 1.0 - Rtot / R_hat
                    sh = g * Rh[i, j] * crowd - d * Rh[i, j]
                    se = (g - gamma) * Re[i, j] * crowd - (d + s) * Re[i, j]
                    ft = c * (d * Rtot + s * Re[i, j]) - k * T[i, j]
                bh = Rh[i, j] + dt * (lap_h[i, j] + sh)
                be = Re[i, j] + dt * (lap_e[i, j] + se)
                if exchange:
                    if implicit:
                        den = 1.0 + a * (p + q)
                        rhn = ((1.0 + a * q) * bh + a * q * be) / den
                        ren = (a * p * bh + (1.0 + a * p) * be) / den
                    else:
                        ex = (p * Rh[i, j] - q * Re[i, j]) / eps
                        rhn = bh - dt * ex
                        ren = be + dt * ex
                else:
                    rhn = bh
                    ren = be
                tn = T[i, j] + dt * (lap_T[i, j] + ft)
                if clamp:
                    if rhn < 0.0:
                        rhn = 0.0
                    if ren < 0.0:
                        ren = 0.0
                    if tn < 0.0:
                        tn = 0.0
                if not (np.isfinite(rhn) and np.isfinite(ren) and np.isfinite(tn)):
                    bad = i * nx + j
                Rh[i, j] = rhn
                Re[i, j] = ren
                T[i, j] = tn
        if bad >= 0:
            return step, bad
    return -1, -1
