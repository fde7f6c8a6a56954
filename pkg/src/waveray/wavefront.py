"""Bundle coupling: flux-tube amplitude transport and the Wave Potential.

Rays launched together are treated as one wavefront at every instant. The
transverse coordinate is the arclength ``sigma`` along the polyline through
the ray positions. Amplitudes come from conserving ``R^2 |p| w`` in each tube,
the Wave Potential ``Q = -(eps/2pi)^2 R''/R`` is differentiated along sigma
only, and its gradient is directed along the unit tangent perpendicular to
each ray's momentum, so the coupling force does no work.

Two discretisations of dQ/dsigma live here. ``wave_potential_gradient``
differentiates the fitted Q directly. ``wave_potential_slope`` is what the
integrator uses: it writes the force in stress form,
``R^2 dQ/dsigma = dT/dsigma`` with ``T = -hbar^2 R^2 (ln R)''``, with T
held on the flux tubes. Differentiating a fitted Q on the rays has
stencils that change sign at grid scale, and those modes grow over long
runs; the tube form stays restoring at every wavelength. The tube masses
in the stress form are the launch contents R^2 w, not flux / |p|. Dividing
by the current |p| only rescales them while |p| is uniform across the front,
and Q ignores a common scale; near a turning point |p| collapses to the
transverse momentum, which varies across the front by orders of magnitude
and would kick the bundle for a few steps.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import AMPLITUDE_FLOOR, Bundle, Units

LOG_FLOOR = float(np.log(AMPLITUDE_FLOOR))


class CausticError(RuntimeError):
    """Adjacent rays are about to cross; the ray description breaks down."""

    def __init__(self, tube: int, spacing: float, time: float):
        self.tube = tube
        self.spacing = spacing
        self.time = time
        super().__init__(f"caustic: tube {tube} width {spacing:.3e} at t={time:.6g}")


class AmplitudeFloorError(RuntimeError):
    """A ray amplitude dropped below the floor where R''/R is meaningless."""

    def __init__(self, ray: int, amplitude: float):
        self.ray = ray
        self.amplitude = amplitude
        super().__init__(f"ray {ray} amplitude {amplitude:.3e} below floor {AMPLITUDE_FLOOR:g}")


@dataclass
class WavefrontGeometry:
    sigma: np.ndarray  # arclength along the wavefront, sigma[0] == 0
    widths: np.ndarray  # tube widths sigma[k+1] - sigma[k]
    tx: np.ndarray  # unit tangent perpendicular to p, oriented along +sigma
    tz: np.ndarray


def _tangents(x, z, px, pz):
    speed = np.hypot(px, pz)
    with np.errstate(invalid="ignore", divide="ignore"):
        tx = -pz / speed
        tz = px / speed
    # local polyline direction decides the orientation
    dx = np.empty_like(x)
    dz = np.empty_like(z)
    dx[1:-1] = x[2:] - x[:-2]
    dz[1:-1] = z[2:] - z[:-2]
    dx[0], dz[0] = x[1] - x[0], z[1] - z[0]
    dx[-1], dz[-1] = x[-1] - x[-2], z[-1] - z[-2]
    still = speed == 0
    if np.any(still):
        norm = np.hypot(dx[still], dz[still])
        tx[still] = dx[still] / norm
        tz[still] = dz[still] / norm
    flip = tx * dx + tz * dz < 0
    tx[flip] = -tx[flip]
    tz[flip] = -tz[flip]
    return tx, tz


def geometry_from_arrays(x, z, px, pz, min_spacing=1e-4, time=0.0, check=True) -> WavefrontGeometry:
    widths = np.hypot(np.diff(x), np.diff(z))
    if check:
        bad = np.flatnonzero(widths <= min_spacing)
        if bad.size:
            k = int(bad[np.argmin(widths[bad])])
            raise CausticError(k, float(widths[k]), float(time))
    sigma = np.concatenate(([0.0], np.cumsum(widths)))
    tx, tz = _tangents(x, z, px, pz)
    return WavefrontGeometry(sigma, widths, tx, tz)


def wavefront_geometry(bundle: Bundle, min_spacing: float = 1e-4) -> WavefrontGeometry:
    """Arclength coordinate, tube widths and transverse tangents of a bundle.

    Raises
    ------
    CausticError
        If any tube is no wider than ``min_spacing``.
    """
    return geometry_from_arrays(bundle.x, bundle.z, bundle.px, bundle.pz, min_spacing, bundle.time)


class LocalQuadraticFit:
    """Least-squares quadratic fits of samples on a nonuniform 1-D grid.

    Each point j is fitted with a parabola over ``window`` neighbours
    (shifted one-sided windows at the ends) and the parabola's first and
    second derivatives are evaluated at the point. The fit is linear in the
    samples, so the weights are computed once per grid and reused for every
    quantity sampled on it. With ``window == 3`` the weights are the exact
    three-point nonuniform stencils.
    """

    def __init__(self, sigma, window: int = 5):
        sigma = np.asarray(sigma, dtype=float)
        n = sigma.size
        if window < 3 or window % 2 == 0 or window > n:
            raise ValueError(f"window must be odd, >= 3 and <= {n}, got {window}")
        half = window // 2
        start = np.clip(np.arange(n) - half, 0, n - window)
        self.index = start[:, None] + np.arange(window)[None, :]
        offsets = sigma[self.index] - sigma[:, None]
        # rescale each window to O(1) so the normal equations stay well conditioned
        scale = sigma[self.index[:, -1]] - sigma[self.index[:, 0]]
        u = offsets / scale[:, None]
        u2 = u * u
        a = float(window)
        b = u.sum(axis=1)
        c = u2.sum(axis=1)
        d = (u2 * u).sum(axis=1)
        e = (u2 * u2).sum(axis=1)
        # rows 1 and 2 of the inverse normal matrix via cofactors
        c01 = c * d - b * e
        c11 = a * e - c * c
        c12 = b * c - a * d
        c02 = b * d - c * c
        c22 = a * c - b * b
        det = a * (c * e - d * d) + b * c01 + c * c02
        self.first = (c01[:, None] + c11[:, None] * u + c12[:, None] * u2) / (det * scale)[:, None]
        self.second = 2.0 * (c02[:, None] + c12[:, None] * u + c22[:, None] * u2) / (det * scale * scale)[:, None]

    def derivative(self, values):
        return np.einsum("nw,nw->n", self.first, values[self.index])

    def second_derivative(self, values):
        return np.einsum("nw,nw->n", self.second, values[self.index])


def transport_log_amplitudes(bundle: Bundle, widths, speed=None):
    """ln R per ray from the conserved tube fluxes.

    The tube amplitude follows from ``Rbar^2 |pbar| w = flux``. A ray takes
    the mean of the log-changes of its two neighbouring tubes since launch
    (one tube at the edges), applied to its own launch amplitude.
    """
    if speed is None:
        speed = np.hypot(bundle.px, bundle.pz)
    tube_speed = 0.5 * (speed[:-1] + speed[1:])
    launch = bundle.launch_log_amplitude
    with np.errstate(divide="ignore"):
        tube_log = 0.5 * (np.log(bundle.tube_flux) - np.log(tube_speed * widths))
    change = tube_log - 0.5 * (launch[:-1] + launch[1:])
    ray_change = np.empty_like(launch)
    ray_change[1:-1] = 0.5 * (change[:-1] + change[1:])
    ray_change[0] = change[0]
    ray_change[-1] = change[-1]
    return launch + ray_change


def transport_amplitudes(bundle: Bundle, geometry: WavefrontGeometry) -> np.ndarray:
    """Per-ray amplitudes R_j implied by flux conservation in each tube."""
    return np.exp(transport_log_amplitudes(bundle, geometry.widths))


def wave_potential_from_log(sigma, log_amplitude, units: Units, window: int = 5, fit=None):
    """Q_j = -(eps/2pi)^2 R''/R from ln R sampled along the wavefront.

    The parabola is fitted to ln R, and ``R''/R = (ln R)'' + ((ln R)')^2``.
    A Gaussian cross-section is then reproduced exactly on any spacing.
    """
    low = np.flatnonzero(log_amplitude < LOG_FLOOR)
    if low.size:
        j = int(low[0])
        raise AmplitudeFloorError(j, float(np.exp(log_amplitude[j])))
    if fit is None:
        fit = LocalQuadraticFit(sigma, window)
    slope = fit.derivative(log_amplitude)
    curvature = fit.second_derivative(log_amplitude)
    return -(units.hbar_scaled**2) * (curvature + slope**2)


def wave_potential(bundle: Bundle, geometry: WavefrontGeometry, amplitudes, units: Units,
                   window: int = 5) -> np.ndarray:
    """Dimensionless Wave Potential Q/E at every ray.

    Raises
    ------
    AmplitudeFloorError
        If some amplitude is below 1e-12 (relative to the launch peak).
    """
    amplitudes = np.asarray(amplitudes, dtype=float)
    with np.errstate(divide="ignore"):
        log_r = np.log(amplitudes)
    return wave_potential_from_log(geometry.sigma, log_r, units, window)


def tube_curvatures(widths, tube_log):
    """(ln R)'' at tube centres from three-point parabolas.

    Centre gaps are built from the widths alone, so a mirrored bundle gives
    bitwise mirrored curvatures. The two edge tubes reuse their
    neighbour's parabola.
    """
    w = np.asarray(widths, dtype=float)
    s = np.asarray(tube_log, dtype=float)
    gap = 0.5 * (w[:-1] + w[1:])
    span = 0.5 * (w[:-2] + w[2:]) + w[1:-1]
    curv = np.empty_like(s)
    curv[1:-1] = 2.0 * ((s[2:] - s[1:-1]) / gap[1:] - (s[1:-1] - s[:-2]) / gap[:-1]) / span
    curv[0] = curv[1]
    curv[-1] = curv[-2]
    return curv


def _ghost_log(s_edge, s_next, gap, curv, width):
    # edge parabola continued one tube width outwards
    inward = (s_next - s_edge) / gap - 0.5 * curv * gap
    return s_edge - inward * width + 0.5 * curv * width * width


def wave_potential_slope(widths, masses, units: Units):
    """Stress-form dQ/dsigma at every ray, as used by the integrator.

    ``masses`` are the launch R^2 w content of each tube.
    Tube log-amplitudes ``s_k = ln sqrt(m_k / w_k)`` give tube stresses
    ``T_k = -hbar^2 e^{2 s_k} s_k''``. Ray j sits between tubes j-1 and j
    and gets ``(T_j - T_{j-1}) / (gap * logmean(R^2))``. The log-mean makes
    the quotient exact when ln R is quadratic, so a Gaussian cross-section
    is reproduced exactly on a uniform grid. Each edge ray gets a ghost
    tube continuing the edge parabola, standing in for the cut-off tail.
    """
    w = np.asarray(widths, dtype=float)
    s = 0.5 * np.log(np.asarray(masses, dtype=float) / w)
    curv = tube_curvatures(w, s)
    gap = 0.5 * (w[:-1] + w[1:])
    s_all = np.concatenate((
        [_ghost_log(s[0], s[1], gap[0], curv[0], w[0])],
        s,
        [_ghost_log(s[-1], s[-2], gap[-1], curv[-1], w[-1])],
    ))
    k_all = np.concatenate(([curv[0]], curv, [curv[-1]]))
    g_all = np.concatenate(([w[0]], gap, [w[-1]]))
    h = s_all[1:] - s_all[:-1]
    with np.errstate(invalid="ignore"):
        shape = np.where(h == 0.0, 1.0, np.abs(h) / np.sinh(np.abs(h)))
    stress_jump = np.exp(h) * k_all[1:] - np.exp(-h) * k_all[:-1]
    return -(units.hbar_scaled**2) * stress_jump * shape / g_all


def wave_potential_gradient(bundle: Bundle, geometry: WavefrontGeometry, q_values,
                            window: int = 5, fit=None):
    """Gradient of Q at every ray, ``(dQ/dsigma) * t_hat``.

    Returns the components ``(dQ/dx, dQ/dz)``; the force on a ray is minus
    half of this in the dimensionless equations of motion.
    """
    if fit is None:
        fit = LocalQuadraticFit(geometry.sigma, window)
    dq = fit.derivative(np.asarray(q_values, dtype=float))
    return dq * geometry.tx, dq * geometry.tz
