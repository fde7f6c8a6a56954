"""Stationary external potentials in dimensionless form.

Every field is a small frozen dataclass with ``value(x, z)`` and
``gradient(x, z)``. Lengths are in units of the launch half-width w0 and
energies in units of the particle energy E, so a field of strength 1 is a
barrier exactly as high as the beam energy.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import ClassVar, Union

import numpy as np


class FieldError(ValueError):
    """Invalid field parameters."""


def _positive(name, value):
    if not np.isfinite(value) or value <= 0:
        raise FieldError(f"field.{name} must be > 0, got {value!r}")


@dataclass(frozen=True)
class Free:
    type: ClassVar[str] = "free"

    def value(self, x, z):
        return np.zeros(np.broadcast(x, z).shape)

    def gradient(self, x, z):
        shape = np.broadcast(x, z).shape
        return np.zeros(shape), np.zeros(shape)


@dataclass(frozen=True)
class ConstantForce:
    """Linear potential ``f * z``; the force points towards negative z."""

    f: float
    type: ClassVar[str] = "constant_force"

    def value(self, x, z):
        return self.f * np.asarray(z, dtype=float) + 0.0 * np.asarray(x, dtype=float)

    def gradient(self, x, z):
        shape = np.broadcast(x, z).shape
        return np.zeros(shape), np.full(shape, float(self.f))


@dataclass(frozen=True)
class GaussianBarrier:
    """``v0_ratio * exp(-2 (z - z_g)^2 / d^2)``; ``d`` is the distance between the flexes."""

    v0_ratio: float
    z_g: float
    d: float
    type: ClassVar[str] = "gaussian_barrier"

    def __post_init__(self):
        _positive("v0_ratio", self.v0_ratio)
        _positive("d", self.d)

    def value(self, x, z):
        u = np.asarray(z, dtype=float) - self.z_g
        return self.v0_ratio * np.exp(-2.0 * u**2 / self.d**2) + 0.0 * np.asarray(x, dtype=float)

    def gradient(self, x, z):
        u = np.asarray(z, dtype=float) - self.z_g
        dvdz = -4.0 * u / self.d**2 * self.v0_ratio * np.exp(-2.0 * u**2 / self.d**2)
        dvdz = dvdz + 0.0 * np.asarray(x, dtype=float)
        return np.zeros_like(dvdz), dvdz


@dataclass(frozen=True)
class LogisticStep:
    """``v0_ratio / (1 + exp(-alpha (z - z_l)))``, rising from 0 to ``v0_ratio``."""

    v0_ratio: float
    alpha: float
    z_l: float
    type: ClassVar[str] = "logistic_step"

    def __post_init__(self):
        _positive("v0_ratio", self.v0_ratio)
        _positive("alpha", self.alpha)

    def _sigmoid(self, z):
        # scipy.special.expit is overflow-safe for large |alpha (z - z_l)|
        from scipy.special import expit

        return expit(self.alpha * (np.asarray(z, dtype=float) - self.z_l))

    def value(self, x, z):
        return self.v0_ratio * self._sigmoid(z) + 0.0 * np.asarray(x, dtype=float)

    def gradient(self, x, z):
        s = self._sigmoid(z)
        dvdz = self.v0_ratio * self.alpha * s * (1.0 - s) + 0.0 * np.asarray(x, dtype=float)
        return np.zeros_like(dvdz), dvdz


@dataclass(frozen=True)
class Lens:
    """Focusing bump obtained from the refractive index
    ``n = 1 + exp(-(x/l_x)^2 - ((z - z_0)/l_z)^2)`` through ``V = 1 - n^2``.
    """

    l_x: float
    l_z: float
    z_0: float
    type: ClassVar[str] = "lens"

    def __post_init__(self):
        _positive("l_x", self.l_x)
        _positive("l_z", self.l_z)

    def _bump(self, x, z):
        x = np.asarray(x, dtype=float)
        z = np.asarray(z, dtype=float)
        return np.exp(-((x / self.l_x) ** 2) - ((z - self.z_0) / self.l_z) ** 2)

    def index(self, x, z):
        return 1.0 + self._bump(x, z)

    def value(self, x, z):
        n = self.index(x, z)
        return 1.0 - n**2

    def gradient(self, x, z):
        g = self._bump(x, z)
        n = 1.0 + g
        # dV = -2 n dn, dn = g * d(exponent)
        dvdx = -2.0 * n * g * (-2.0 * np.asarray(x, dtype=float) / self.l_x**2)
        dvdz = -2.0 * n * g * (-2.0 * (np.asarray(z, dtype=float) - self.z_0) / self.l_z**2)
        return dvdx, dvdz


FieldSpec = Union[Free, ConstantForce, GaussianBarrier, LogisticStep, Lens]

FIELD_TYPES = {cls.type: cls for cls in (Free, ConstantForce, GaussianBarrier, LogisticStep, Lens)}


def field_value(spec: FieldSpec, x, z):
    """Dimensionless potential V(x, z)."""
    return spec.value(x, z)


def field_gradient(spec: FieldSpec, x, z):
    """Analytic gradient ``(dV/dx, dV/dz)``."""
    return spec.gradient(x, z)


def field_to_dict(spec: FieldSpec) -> dict:
    return {"type": spec.type, **asdict(spec)}


def field_from_dict(data: dict) -> FieldSpec:
    """Build a field from its config mapping, rejecting unknown keys."""
    if not isinstance(data, dict):
        raise FieldError(f"field must be a mapping, got {type(data).__name__}")
    data = dict(data)
    kind = data.pop("type", None)
    if kind not in FIELD_TYPES:
        raise FieldError(f"field.type must be one of {sorted(FIELD_TYPES)}, got {kind!r}")
    cls = FIELD_TYPES[kind]
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise FieldError(f"field: unknown key(s) {sorted(unknown)} for type {kind!r}")
    missing = names - set(data)
    if missing:
        raise FieldError(f"field: missing key(s) {sorted(missing)} for type {kind!r}")
    try:
        params = {k: float(v) for k, v in data.items()}
    except (TypeError, ValueError) as exc:
        raise FieldError(f"field: parameters must be numbers ({exc})") from None
    return cls(**params)
