"""Self-checks behind ``waveray validate``.

Each check returns ``(passed, metrics)``; metrics are plain floats/ints so the
CLI can print them and the manifest can store them.
"""
from __future__ import annotations

import math

import numpy as np

from .fields import ConstantForce, Free, GaussianBarrier, Lens, LogisticStep
from .integrator import run
from .oracle import (
    angular_spectrum_propagate,
    count_lobes,
    l2_relative_error,
    launch_field,
    ray_intensity_on_grid,
    uniform_grid,
)
from .scenarios import analytic_waist, preset, waist_trace

WAIST_TOLERANCE = 0.01
ORACLE_TOLERANCE = 0.05
GRADIENT_STEP = 1e-6
GRADIENT_TOLERANCE = 1e-5
GRADIENT_FLOOR = 1e-4
ENERGY_TOLERANCE = 1e-6
FREE_SPEED_TOLERANCE = 1e-9


def waist_deviation(frames, units) -> float:
    z, lo, hi = waist_trace(frames)
    expected = analytic_waist(z, units)
    return float(max(np.max(np.abs(-lo - expected) / expected), np.max(np.abs(hi - expected) / expected)))


def check_free_gaussian(frames=None):
    cfg = preset("fig1_free_diffraction")
    if frames is None:
        frames, _ = run(cfg)
    dev = waist_deviation(frames, cfg.units)
    return dev <= WAIST_TOLERANCE, {"max_waist_deviation": dev, "z_final": float(frames[-1].z[cfg.n_rays // 2])}


def oracle_comparison(frame, cfg, extent=64.0, n_points=2048):
    """L2 error and lobe counts of a free-space frame against the full-wave field."""
    grid = uniform_grid(extent, n_points)
    z = float(frame.z[cfg.n_rays // 2])
    wave = angular_spectrum_propagate(launch_field(cfg.profile, grid), z, cfg.units).intensity
    rays = ray_intensity_on_grid(frame, grid)
    return {
        "z": z,
        "l2_error": l2_relative_error(rays, wave),
        "ray_lobes": count_lobes(rays),
        "wave_lobes": count_lobes(wave),
    }


def check_two_gaussian(frames=None):
    cfg = preset("fig2_two_gaussians")
    if frames is None:
        frames, _ = run(cfg)
    m = oracle_comparison(frames[-1], cfg)
    ok = m["l2_error"] <= ORACLE_TOLERANCE and m["ray_lobes"] == m["wave_lobes"] and m["ray_lobes"] >= 2
    return ok, m


def sample_fields():
    return (
        Free(),
        ConstantForce(1e-4),
        GaussianBarrier(1.0 / 0.99, 1e4, 5e3),
        LogisticStep(1.0 / 1.01, 0.002, 1e4),
        Lens(20.0, 1000.0, 2000.0),
    )


def gradient_error(field, x, z, h=GRADIENT_STEP) -> float:
    """Relative mismatch between the analytic gradient and central differences.

    The error is measured against the gradient norm, floored at
    ``GRADIENT_FLOOR * max(1, |V|)``: with h = 1e-6 the differences carry
    about 1e-10 of round-off, so smaller gradients cannot be resolved to 1e-5.
    """
    gx, gz = field.gradient(x, z)
    fx = (field.value(x + h, z) - field.value(x - h, z)) / (2 * h)
    fz = (field.value(x, z + h) - field.value(x, z - h)) / (2 * h)
    norm = math.hypot(gx, gz)
    floor = GRADIENT_FLOOR * max(1.0, abs(float(field.value(x, z))))
    return math.hypot(fx - gx, fz - gz) / max(norm, floor)


def check_gradient_fields(n_points: int = 200, seed: int = 0):
    rng = np.random.default_rng(seed)
    worst = {}
    for field in sample_fields():
        xs = rng.uniform(-8.0, 8.0, n_points)
        zs = rng.uniform(0.0, 2.5e4, n_points)
        worst[field.type] = max(gradient_error(field, float(x), float(z)) for x, z in zip(xs, zs))
    return all(v <= GRADIENT_TOLERANCE for v in worst.values()), worst


def energy_metrics(frames) -> dict:
    e = np.array([f.e_mech for f in frames])
    speed = np.array([np.hypot(f.px, f.pz) for f in frames])
    return {
        "max_drift": float(np.max(np.abs(e - e[0]))),
        "max_offset": float(np.max(np.abs(e - 1.0))),
        "max_speed_deviation": float(np.max(np.abs(speed - 1.0))),
    }


def check_energy_audit(free_frames=None, step_frames=None):
    if free_frames is None:
        free_frames, _ = run(preset("fig1_free_diffraction"))
    if step_frames is None:
        step_frames, _ = run(preset("fig10_step_high"))
    free = energy_metrics(free_frames)
    step = energy_metrics(step_frames)
    metrics = {
        "free_speed_deviation": free["max_speed_deviation"],
        "free_energy_offset": free["max_offset"],
        "step_energy_drift": step["max_drift"],
        "step_energy_offset": step["max_offset"],
    }
    ok = (free["max_speed_deviation"] <= FREE_SPEED_TOLERANCE
          and max(free["max_offset"], step["max_offset"], step["max_drift"]) <= ENERGY_TOLERANCE)
    return ok, metrics


CHECKS = {
    "free-gaussian": check_free_gaussian,
    "two-gaussian": check_two_gaussian,
    "gradient-fields": check_gradient_fields,
    "energy-audit": check_energy_audit,
}
