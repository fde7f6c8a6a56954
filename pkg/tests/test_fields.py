import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from waveray.fields import (
    ConstantForce,
    FieldError,
    Free,
    GaussianBarrier,
    Lens,
    LogisticStep,
    field_from_dict,
    field_gradient,
    field_to_dict,
    field_value,
)
from waveray.validation import GRADIENT_TOLERANCE, check_gradient_fields, gradient_error

coords = st.tuples(st.floats(-10, 10), st.floats(-1e3, 3e4))

fields = st.one_of(
    st.just(Free()),
    st.floats(1e-6, 1e-2).map(ConstantForce),
    st.builds(GaussianBarrier, st.floats(0.1, 5.0), st.floats(0, 2e4), st.floats(1e2, 1e4)),
    st.builds(LogisticStep, st.floats(0.1, 5.0), st.floats(1e-4, 1e-2), st.floats(0, 2e4)),
    st.builds(Lens, st.floats(1.0, 50.0), st.floats(10.0, 2e3), st.floats(-1e3, 3e3)),
)


@settings(max_examples=300, deadline=None)
@given(fields, coords)
def test_gradient_matches_central_differences(field, point):
    # [DERIVED] finite-difference oracle, h = 1e-6
    assert gradient_error(field, *point) <= GRADIENT_TOLERANCE


@settings(max_examples=100, deadline=None)
@given(fields)
def test_dict_round_trip(field):
    assert field_from_dict(field_to_dict(field)) == field


@given(st.floats(-10, 10), st.floats(-1e4, 1e4))
def test_free_is_zero(x, z):
    assert field_value(Free(), x, z) == 0.0
    assert all(g == 0.0 for g in field_gradient(Free(), x, z))


def test_constant_force_values():
    f = ConstantForce(1e-4)
    # [TRIVIAL] V = f z, force towards -z
    assert field_value(f, 3.0, 1e4) == pytest.approx(1.0)
    gx, gz = field_gradient(f, 0.0, 5.0)
    assert gx == 0.0 and gz == 1e-4


def test_barrier_peak_and_flexes():
    b = GaussianBarrier(1.2, 1e4, 5e3)
    assert field_value(b, 0.0, 1e4) == pytest.approx(1.2)
    # flexes of exp(-2 u^2/d^2) sit at u = +-d/2, so d is the distance between them
    u = np.linspace(-1e4, 1e4, 200001)
    v = b.value(0.0, 1e4 + u)
    curvature = np.diff(v, 2)
    flex = u[1:-1][np.flatnonzero(np.diff(np.sign(curvature)))]
    assert flex.min() == pytest.approx(-2500.0, abs=0.2)
    assert flex.max() == pytest.approx(2500.0, abs=0.2)


def test_step_midpoint_and_plateaus():
    s = LogisticStep(0.25, 0.002, 1e4)
    assert field_value(s, 0.0, 1e4) == pytest.approx(0.125)
    assert field_value(s, 0.0, 0.0) == pytest.approx(0.25 / (1 + math.exp(20)))
    assert field_value(s, 0.0, 1e6) == pytest.approx(0.25)
    # no overflow far on the low side
    assert field_value(s, 0.0, -1e7) == 0.0


def test_lens_centre_value():
    lens = Lens(20.0, 1000.0, 2000.0)
    # [TRIVIAL] n = 2 at the centre so V = 1 - 4
    assert field_value(lens, 0.0, 2000.0) == pytest.approx(-3.0)
    assert lens.index(0.0, 2000.0) == pytest.approx(2.0)
    gx, gz = field_gradient(lens, 0.0, 2000.0)
    assert gx == 0.0 and gz == 0.0


def test_broadcasting():
    x = np.linspace(-1, 1, 7)
    for spec in (Free(), ConstantForce(1e-4), GaussianBarrier(1, 1, 1), LogisticStep(1, 1, 1), Lens(1, 1, 1)):
        assert np.shape(spec.value(x, 0.5)) == x.shape
        assert all(np.shape(g) == x.shape for g in spec.gradient(x, 0.5))


@pytest.mark.parametrize("data, fragment", [
    ({"type": "wall"}, "field.type"),
    ({"type": "lens", "l_x": 1.0}, "missing"),
    ({"type": "constant_force", "f": 1.0, "g": 2.0}, "unknown"),
    ({"type": "gaussian_barrier", "v0_ratio": -1.0, "z_g": 0.0, "d": 1.0}, "v0_ratio"),
    ({"type": "lens", "l_x": 0.0, "l_z": 1.0, "z_0": 0.0}, "l_x"),
])
def test_invalid_fields(data, fragment):
    with pytest.raises(FieldError, match=fragment):
        field_from_dict(data)


def test_gradient_self_check_passes():
    ok, worst = check_gradient_fields()
    assert ok, worst
