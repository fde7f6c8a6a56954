"""Fixed-step RK4 integration of the coupled ray bundle.

The state of all rays is advanced together. In ``exact`` mode every RK4
stage rebuilds the wavefront (geometry, amplitudes, Q and its transverse
gradient) from that stage's positions and momenta. The coupling force uses
the energy-consistent slope of Q (``wavefront.wave_potential_slope``).
``eikonal`` mode drops the Wave Potential and leaves classical motion in V.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from ._kernels import exact_coupling
from .core import Bundle, Frame, ScenarioConfig, Units, beam_width, build_bundle
from .fields import FieldSpec
from .wavefront import (
    LOG_FLOOR,
    AmplitudeFloorError,
    CausticError,
    geometry_from_arrays,
    transport_log_amplitudes,
    wave_potential_from_log,
    wave_potential_slope,
)

log = logging.getLogger(__name__)

_MIN_WIDTH = 1e-300  # keeps eikonal amplitudes finite when rays cross


@dataclass
class StepReport:
    time: float
    steps: int
    max_energy_drift: float  # max_j |e_mech_j(t) - e_mech_j(0)| over recorded frames
    max_speed_deviation: float  # max_j ||p_j| - 1| over recorded frames
    caustic_margin: float  # smallest tube width seen at any step (exact mode)
    max_transversality: float  # max_j |p.gradQ| / (|p||gradQ|) over all steps
    status: str = "ok"

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class _Evaluation:
    ax: np.ndarray
    az: np.ndarray
    log_amplitude: np.ndarray
    q: np.ndarray
    min_width: float
    transversality: float


class _Dynamics:
    """Right-hand side of the ray equations for one run."""

    def __init__(self, bundle: Bundle, field: FieldSpec, mode: str, units: Units,
                 window: int = 5, min_spacing: float = 1e-4, use_kernel: bool = True):
        if mode not in ("exact", "eikonal"):
            raise ValueError(f"mode must be 'exact' or 'eikonal', got {mode!r}")
        self.tube_flux = bundle.tube_flux
        self.tube_mass = bundle.tube_mass
        self.launch_log = bundle.launch_log_amplitude
        self.field = field
        self.mode = mode
        self.units = units
        self.window = window
        self.min_spacing = min_spacing
        self.use_kernel = use_kernel and exact_coupling is not None

    def _transport(self, widths, speed):
        shim = Bundle.__new__(Bundle)
        shim.tube_flux = self.tube_flux
        shim.launch_log_amplitude = self.launch_log
        return transport_log_amplitudes(shim, widths, speed)

    def evaluate(self, x, z, px, pz, time, diagnostics=False) -> _Evaluation:
        gvx, gvz = self.field.gradient(x, z)
        if self.mode == "eikonal":
            speed = np.hypot(px, pz)
            widths = np.maximum(np.hypot(np.diff(x), np.diff(z)), _MIN_WIDTH)
            log_r = self._transport(widths, speed)
            zero = np.zeros_like(x)
            return _Evaluation(-0.5 * gvx, -0.5 * gvz, log_r, zero, float(widths.min()), 0.0)

        if self.use_kernel:
            gqx, gqz, log_r, q, min_width, status, where = exact_coupling(
                x, z, px, pz, self.tube_flux, self.tube_mass, self.launch_log, self.units.hbar_scaled**2,
                self.window, self.min_spacing, LOG_FLOOR,
            )
            if status == _kernels.CAUSTIC:
                raise CausticError(int(where), float(np.hypot(x[where + 1] - x[where], z[where + 1] - z[where])),
                                   float(time))
            if status == _kernels.FLOOR:
                raise AmplitudeFloorError(int(where), float(np.exp(log_r[where])))
        else:
            geom = geometry_from_arrays(x, z, px, pz, self.min_spacing, time)
            speed = np.hypot(px, pz)
            log_r = self._transport(geom.widths, speed)
            q = wave_potential_from_log(geom.sigma, log_r, self.units, window=self.window)
            dq = wave_potential_slope(geom.widths, self.tube_mass, self.units)
            gqx = dq * geom.tx
            gqz = dq * geom.tz
            min_width = float(geom.widths.min())
        ratio = 0.0
        if diagnostics:
            norm = np.hypot(px, pz) * np.hypot(gqx, gqz)
            along = np.abs(px * gqx + pz * gqz)
            with np.errstate(invalid="ignore", divide="ignore"):
                ratio = float(np.where(norm > 0, along / norm, 0.0).max())
        return _Evaluation(-0.5 * (gvx + gqx), -0.5 * (gvz + gqz), log_r, q, float(min_width), ratio)


def force(bundle: Bundle, spec: FieldSpec, mode: str, units: Units, window: int = 5,
          min_spacing: float = 1e-4):
    """Per-ray force ``-grad(V + Q)`` (``-grad V`` alone in eikonal mode).

    In the dimensionless equations ``dp/dt`` is half of this.
    """
    dyn = _Dynamics(bundle, spec, mode, units, window, min_spacing)
    ev = dyn.evaluate(bundle.x, bundle.z, bundle.px, bundle.pz, bundle.time)
    return 2.0 * ev.ax, 2.0 * ev.az


def _rk4(dyn: _Dynamics, y, time, dt, first: _Evaluation | None = None):
    """One classical RK4 step of y = (x, z, px, pz)."""
    def rhs(state, t, ev=None):
        if ev is None:
            ev = dyn.evaluate(state[0], state[1], state[2], state[3], t)
        return np.stack((state[2], state[3], ev.ax, ev.az)), ev

    k1, ev1 = rhs(y, time, first)
    k2, _ = rhs(y + 0.5 * dt * k1, time + 0.5 * dt)
    k3, _ = rhs(y + 0.5 * dt * k2, time + 0.5 * dt)
    k4, _ = rhs(y + dt * k3, time + dt)
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4), ev1


def step_rk4(bundle: Bundle, spec: FieldSpec, mode: str, dt: float, units: Units,
             window: int = 5, min_spacing: float = 1e-4) -> Bundle:
    """Advance a bundle by one RK4 step and refresh its amplitudes and Q.

    The input bundle is never modified, so on a ``CausticError`` it still
    holds the last good state.
    """
    if not dt > 0:
        raise ValueError(f"dt must be > 0, got {dt!r}")
    dyn = _Dynamics(bundle, spec, mode, units, window, min_spacing)
    y = np.stack((bundle.x, bundle.z, bundle.px, bundle.pz))
    y_new, _ = _rk4(dyn, y, bundle.time, dt)
    time = bundle.time + dt
    ev = dyn.evaluate(y_new[0], y_new[1], y_new[2], y_new[3], time)
    out = bundle.copy()
    out.x, out.z, out.px, out.pz = (row.copy() for row in y_new)
    out.amplitude = np.exp(ev.log_amplitude)
    out.q_value = ev.q
    out.time = time
    return out


def make_frame(time, y, field: FieldSpec, log_amplitude, q) -> Frame:
    x, z, px, pz = (np.array(row, dtype=float) for row in y)
    amplitude = np.exp(log_amplitude)
    e_mech = px**2 + pz**2 + field.value(x, z)
    return Frame(time, x, z, px, pz, amplitude, np.array(q, dtype=float), e_mech,
                 beam_width(x, z, amplitude))


class RunAborted(RuntimeError):
    """A run stopped early; ``frames`` and ``report`` hold what was recorded."""

    def __init__(self, cause: Exception, frames: list[Frame], report: StepReport):
        self.cause = cause
        self.frames = frames
        self.report = report
        super().__init__(str(cause))


def _step_count(config: ScenarioConfig) -> float:
    if config.t_max is None:
        return math.inf
    return math.ceil(config.t_max / config.dt - 1e-9)


def run(config: ScenarioConfig, mode: str | None = None):
    """Integrate a scenario.

    Stops after ``t_max`` or when the central ray leaves ``0 <= z <= z_max``.
    Frames are taken every ``record_every`` steps plus the first and last
    state.

    Returns
    -------
    frames : list of Frame
    report : StepReport

    Raises
    ------
    RunAborted
        On a caustic or amplitude-floor failure, wrapping the cause together
        with every frame recorded up to and including the last good state.
    """
    config.validate()
    mode = mode or config.mode
    units = config.units
    bundle = build_bundle(config)
    flux_at_launch = bundle.tube_flux.copy()
    dyn = _Dynamics(bundle, config.field, mode, units, config.smoothing, config.caustic_min_spacing)
    field = config.field
    centre = config.n_rays // 2
    n_steps = _step_count(config)
    dt = config.dt

    y = np.stack((bundle.x, bundle.z, bundle.px, bundle.pz))
    e0 = y[2] ** 2 + y[3] ** 2 + field.value(y[0], y[1])
    frames: list[Frame] = []
    report = StepReport(0.0, 0, 0.0, 0.0, math.inf, 0.0)

    def record(time, state, ev):
        frame = make_frame(time, state, field, ev.log_amplitude, ev.q)
        frames.append(frame)
        report.max_energy_drift = max(report.max_energy_drift, float(np.max(np.abs(frame.e_mech - e0))))
        speed = np.hypot(frame.px, frame.pz)
        report.max_speed_deviation = max(report.max_speed_deviation, float(np.max(np.abs(speed - 1.0))))

    def done(step, state):
        if step >= n_steps:
            return True
        if config.z_max is not None and step > 0:
            zc = state[1, centre]
            return zc > config.z_max or zc < 0.0
        return False

    step = 0
    time = 0.0
    good = None
    try:
        ev = dyn.evaluate(y[0], y[1], y[2], y[3], time, diagnostics=True)
        while True:
            good = (time, y, ev)
            report.caustic_margin = min(report.caustic_margin, ev.min_width)
            report.max_transversality = max(report.max_transversality, ev.transversality)
            finished = done(step, y)
            if finished or step % config.record_every == 0:
                record(time, y, ev)
            if finished:
                break
            y, _ = _rk4(dyn, y, time, dt, first=ev)
            step += 1
            time = step * dt
            ev = dyn.evaluate(y[0], y[1], y[2], y[3], time, diagnostics=True)
    except (CausticError, AmplitudeFloorError) as exc:
        report.time, report.steps = time, step
        report.status = "caustic" if isinstance(exc, CausticError) else "amplitude_floor"
        if good is not None and (not frames or frames[-1].time != good[0]):
            record(*good)
        log.warning("run aborted at t=%g: %s", time, exc)
        raise RunAborted(exc, frames, report) from exc

    assert np.array_equal(bundle.tube_flux, flux_at_launch), "tube fluxes changed during the run"
    report.time, report.steps = time, step
    return frames, report

