"""Fused per-stage coupling kernel for the integrator hot loop.

Numerically the same pipeline as ``wavefront`` (geometry, flux transport,
log-amplitude fit for Q, stress-form slope of Q on the flux tubes) written
as explicit loops, so one call replaces a few dozen small array operations.
Falls back to the numpy path when numba is unavailable.
"""
from __future__ import annotations

import numpy as np

try:
    from numba import njit
except ImportError:  # pragma: no cover - exercised only without numba
    njit = None

OK = 0
CAUSTIC = 1
FLOOR = 2


def _exact_coupling(x, z, px, pz, tube_flux, tube_mass, launch_log, hbar2, window, min_spacing, log_floor):
    n = x.size
    widths = np.empty(n - 1)
    sigma = np.empty(n)
    sigma[0] = 0.0
    min_width = np.inf
    worst = -1
    for k in range(n - 1):
        w = np.hypot(x[k + 1] - x[k], z[k + 1] - z[k])
        widths[k] = w
        sigma[k + 1] = sigma[k] + w
        if w <= min_spacing and (worst < 0 or w < widths[worst]):
            worst = k
        if w < min_width:
            min_width = w
    empty = np.zeros(n)
    if worst >= 0:
        return empty, empty, empty, empty, min_width, CAUSTIC, worst

    log_r = np.empty(n)
    change = np.empty(n - 1)
    tube_s = np.empty(n - 1)
    for k in range(n - 1):
        tube_speed = 0.5 * (np.hypot(px[k], pz[k]) + np.hypot(px[k + 1], pz[k + 1]))
        tube_s[k] = 0.5 * np.log(tube_mass[k] / widths[k])
        tube_log = 0.5 * (np.log(tube_flux[k]) - np.log(tube_speed * widths[k]))
        change[k] = tube_log - 0.5 * (launch_log[k] + launch_log[k + 1])
    log_r[0] = launch_log[0] + change[0]
    log_r[n - 1] = launch_log[n - 1] + change[n - 2]
    for j in range(1, n - 1):
        log_r[j] = launch_log[j] + 0.5 * (change[j - 1] + change[j])
    for j in range(n):
        if not log_r[j] >= log_floor:
            return empty, empty, log_r, empty, min_width, FLOOR, j

    half = window // 2
    q = np.empty(n)
    u = np.empty(window)
    for j in range(n):
        s0 = min(max(j - half, 0), n - window)
        scale = sigma[s0 + window - 1] - sigma[s0]
        b = 0.0
        c = 0.0
        d = 0.0
        e = 0.0
        for i in range(window):
            ui = (sigma[s0 + i] - sigma[j]) / scale
            u[i] = ui
            b += ui
            c += ui * ui
            d += ui * ui * ui
            e += ui * ui * ui * ui
        a = float(window)
        c01 = c * d - b * e
        c11 = a * e - c * c
        c12 = b * c - a * d
        c02 = b * d - c * c
        c22 = a * c - b * b
        det = a * (c * e - d * d) + b * c01 + c * c02
        slope = 0.0
        curv = 0.0
        for i in range(window):
            ui = u[i]
            w1 = (c01 + c11 * ui + c12 * ui * ui) / (det * scale)
            w2 = 2.0 * (c02 + c12 * ui + c22 * ui * ui) / (det * scale * scale)
            slope += w1 * log_r[s0 + i]
            curv += w2 * log_r[s0 + i]
        q[j] = -hbar2 * (curv + slope * slope)

    # stress-form slope: tube curvatures, ghost tubes at both edges
    m = n - 1
    curv = np.empty(m)
    for k in range(1, m - 1):
        g0 = 0.5 * (widths[k - 1] + widths[k])
        g1 = 0.5 * (widths[k] + widths[k + 1])
        span = 0.5 * (widths[k - 1] + widths[k + 1]) + widths[k]
        curv[k] = 2.0 * ((tube_s[k + 1] - tube_s[k]) / g1 - (tube_s[k] - tube_s[k - 1]) / g0) / span
    curv[0] = curv[1]
    curv[m - 1] = curv[m - 2]
    s_all = np.empty(m + 2)
    k_all = np.empty(m + 2)
    for k in range(m):
        s_all[k + 1] = tube_s[k]
        k_all[k + 1] = curv[k]
    k_all[0] = curv[0]
    k_all[m + 1] = curv[m - 1]
    g = 0.5 * (widths[0] + widths[1])
    inward = (tube_s[1] - tube_s[0]) / g - 0.5 * curv[0] * g
    s_all[0] = tube_s[0] - inward * widths[0] + 0.5 * curv[0] * widths[0] * widths[0]
    g = 0.5 * (widths[m - 2] + widths[m - 1])
    inward = (tube_s[m - 2] - tube_s[m - 1]) / g - 0.5 * curv[m - 1] * g
    s_all[m + 1] = tube_s[m - 1] - inward * widths[m - 1] + 0.5 * curv[m - 1] * widths[m - 1] * widths[m - 1]

    gqx = np.empty(n)
    gqz = np.empty(n)
    for j in range(n):
        if j == 0:
            gap = widths[0]
        elif j == n - 1:
            gap = widths[m - 1]
        else:
            gap = 0.5 * (widths[j - 1] + widths[j])
        h = s_all[j + 1] - s_all[j]
        if h == 0.0:
            shape = 1.0
        else:
            shape = abs(h) / np.sinh(abs(h))
        jump = np.exp(h) * k_all[j + 1] - np.exp(-h) * k_all[j]
        dq = -hbar2 * jump * shape / gap
        if j == 0:
            dx = x[1] - x[0]
            dz = z[1] - z[0]
        elif j == n - 1:
            dx = x[n - 1] - x[n - 2]
            dz = z[n - 1] - z[n - 2]
        else:
            dx = x[j + 1] - x[j - 1]
            dz = z[j + 1] - z[j - 1]
        speed = np.hypot(px[j], pz[j])
        if speed == 0.0:
            norm = np.hypot(dx, dz)
            tx = dx / norm
            tz = dz / norm
        else:
            tx = -pz[j] / speed
            tz = px[j] / speed
        if tx * dx + tz * dz < 0.0:
            tx = -tx
            tz = -tz
        gqx[j] = dq * tx
        gqz[j] = dq * tz
    return gqx, gqz, log_r, q, min_width, OK, -1


if njit is not None:
    exact_coupling = njit(cache=True)(_exact_coupling)
else:  # pragma: no cover
    exact_coupling = None
