import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from waveray.core import Profile, ScenarioConfig, Units, build_bundle
from waveray.integrator import make_frame
from waveray.oracle import (
    ComplexProfile,
    ResolutionError,
    ValidationError,
    angular_spectrum_propagate,
    count_lobes,
    l2_relative_error,
    launch_field,
    ray_intensity_on_grid,
    rms_half_width,
    uniform_grid,
)

UNITS = Units(1.652e-4)
GRID = uniform_grid(64.0, 2048)


def gaussian():
    return launch_field(Profile(), GRID)


def test_zero_distance_is_identity():
    u = gaussian()
    assert np.array_equal(angular_spectrum_propagate(u, 0.0, UNITS).u, u.u)


@given(st.floats(0.0, 4e4))
@settings(max_examples=20, deadline=None)
def test_power_is_conserved(z):
    u = gaussian()
    out = angular_spectrum_propagate(u, z, UNITS)
    assert out.power() == pytest.approx(u.power(), rel=1e-10)


@pytest.mark.parametrize("fraction", [0.25, 0.5, 1.0, 1.5, 2.0])
def test_gaussian_width_law(fraction):
    z = fraction * 2 * math.pi / UNITS.epsilon
    out = angular_spectrum_propagate(gaussian(), z, UNITS)
    # [DERIVED] paraxial Gaussian beam: rms of |u|^2 is w(z)/2
    expected = 0.5 * math.sqrt(1 + (UNITS.epsilon * z / math.pi) ** 2)
    assert rms_half_width(GRID, out.intensity) == pytest.approx(expected, rel=1e-3)


def test_analytic_gaussian_field():
    z = math.pi / UNITS.epsilon
    out = angular_spectrum_propagate(gaussian(), z, UNITS)
    # [DERIVED] |u|^2 = exp(-2x^2/w^2)/w with w = sqrt(2) at one Rayleigh length
    w = math.sqrt(2.0)
    ref = np.exp(-2 * GRID**2 / w**2) / w
    assert l2_relative_error(out.intensity, ref) < 1e-6


@settings(max_examples=10, deadline=None)
@given(st.floats(0.0, 2e4), st.floats(0.0, 2e4))
def test_propagation_composes(z1, z2):
    u = launch_field(Profile("two_gaussian", 1.4), GRID)
    two = angular_spectrum_propagate(angular_spectrum_propagate(u, z1, UNITS), z2, UNITS)
    one = angular_spectrum_propagate(u, z1 + z2, UNITS)
    assert np.linalg.norm(two.u - one.u) <= 1e-10 * np.linalg.norm(one.u)


def test_resolution_error():
    coarse = launch_field(Profile(), uniform_grid(64.0, 512))
    with pytest.raises(ResolutionError):
        angular_spectrum_propagate(coarse, 10.0, UNITS)


def test_negative_distance():
    with pytest.raises(ValueError):
        angular_spectrum_propagate(gaussian(), -1.0, UNITS)


def test_evanescent_modes_decay():
    x = uniform_grid(4.0, 4096)
    u = ComplexProfile(x, np.cos(2 * math.pi * 800 * x / 4.0).astype(complex))
    units = Units(1.0)  # k0 = 2 pi is below the mode's wavenumber
    out = angular_spectrum_propagate(u, 1.0, units)
    assert np.abs(out.u).max() < 1e-12


def test_profile_requires_uniform_grid():
    with pytest.raises(ValueError):
        ComplexProfile(np.array([0.0, 1.0, 3.0]), np.zeros(3, complex))


def test_ray_intensity_of_launch_frame():
    b = build_bundle(ScenarioConfig(z_max=1.0))
    frame = make_frame(0.0, (b.x, b.z, b.px, b.pz), ScenarioConfig(z_max=1.0).field, np.log(b.amplitude), b.q_value)
    grid = uniform_grid(16.0, 1024)
    ray = ray_intensity_on_grid(frame, grid)
    inside = np.abs(grid) <= 4.0
    assert np.max(np.abs(ray[inside] - np.exp(-2 * grid[inside] ** 2))) <= 1e-4
    assert np.all(ray[~inside] == 0.0)
    assert np.all(ray >= 0.0)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.01, 1.0), min_size=5, max_size=30))
def test_ray_intensity_is_monotone_between_rays(amps):
    n = len(amps) if len(amps) % 2 else len(amps) - 1
    x = np.linspace(-3, 3, n)
    a = np.array(amps[:n])
    frame = make_frame(0.0, (x, np.zeros(n), np.zeros(n), np.ones(n)), ScenarioConfig(z_max=1.0).field,
                       np.log(a), np.zeros(n))
    grid = np.linspace(-3, 3, 601)
    ray = ray_intensity_on_grid(frame, grid)
    for k in range(n - 1):
        seg = ray[(grid >= x[k]) & (grid <= x[k + 1])]
        lo, hi = sorted((a[k] ** 2, a[k + 1] ** 2))
        assert np.all(seg >= lo - 1e-12) and np.all(seg <= hi + 1e-12)


def test_l2_examples():
    a = np.array([1.0, 2.0, 3.0])
    assert l2_relative_error(a, a) == 0.0
    assert l2_relative_error(2 * a, a) == pytest.approx(1.0)
    with pytest.raises(ValidationError):
        l2_relative_error(a, np.zeros(3))
    with pytest.raises(ValidationError):
        l2_relative_error(a, np.zeros(4))


def test_lobe_count():
    x = np.linspace(-5, 5, 1001)
    assert count_lobes(np.exp(-x**2)) == 1
    two = np.exp(-(x - 1.5) ** 2) + np.exp(-(x + 1.5) ** 2)
    assert count_lobes(two) == 2
    assert count_lobes(two + 0.01 * np.exp(-(x - 4) ** 2 * 50), threshold=0.05) == 2
