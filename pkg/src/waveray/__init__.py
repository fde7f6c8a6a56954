"""Trajectory-based wave mechanics: ray bundles coupled by the Wave Potential."""
from .core import (
    Bundle,
    ConfigError,
    Frame,
    Profile,
    RayState,
    ScenarioConfig,
    Units,
    build_bundle,
    make_units,
)
from .fields import ConstantForce, Free, GaussianBarrier, Lens, LogisticStep, field_gradient, field_value
from .integrator import RunAborted, StepReport, force, run, step_rk4
from .oracle import angular_spectrum_propagate, l2_relative_error, ray_intensity_on_grid
from .scenarios import PRESET_TAGS, analytic_waist, preset, waist_trace
from .wavefront import AmplitudeFloorError, CausticError, wave_potential, wave_potential_slope

__version__ = "0.1.0"
