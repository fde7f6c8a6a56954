"""YAML scenario configs: parsing with preset expansion, and the inverse."""
from __future__ import annotations

from dataclasses import fields as dc_fields
from pathlib import Path

import yaml

from .core import ConfigError, Profile, ScenarioConfig
from .fields import FieldError, field_from_dict, field_to_dict
from .scenarios import preset as _preset

TOP_KEYS = tuple(f.name for f in dc_fields(ScenarioConfig))
PROFILE_KEYS = ("type", "offset")


def _number(value, key, integer=False):
    if isinstance(value, str):
        # YAML 1.1 reads exponent literals without a dot (1e-4) as strings
        try:
            value = float(value)
        except ValueError:
            raise ConfigError(f"{key}: expected a number, got {value!r}") from None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    if integer:
        if isinstance(value, float) and not value.is_integer():
            raise ConfigError(f"{key}: expected an integer, got {value!r}")
        return int(value)
    return float(value)


def _profile(data) -> Profile:
    if not isinstance(data, dict):
        raise ConfigError(f"profile: expected a mapping, got {type(data).__name__}")
    unknown = sorted(set(data) - set(PROFILE_KEYS))
    if unknown:
        raise ConfigError(f"profile.{unknown[0]}: unknown key")
    offset = _number(data.get("offset", 0.0), "profile.offset")
    return Profile(data.get("type", "gaussian"), offset)


def _field(data):
    if not isinstance(data, dict):
        raise ConfigError(f"field: expected a mapping, got {type(data).__name__}")
    clean = {}
    for key, value in data.items():
        clean[key] = value if key == "type" else _number(value, f"field.{key}")
    try:
        return field_from_dict(clean)
    except FieldError as exc:
        msg = str(exc)
        raise ConfigError(msg if msg.startswith("field") else f"field: {msg}") from exc


def config_from_dict(data: dict) -> ScenarioConfig:
    """Validated config from a plain mapping; ``preset`` supplies defaults."""
    if data is None:
        data = {}
    if not isinstance(data, dict):
        raise ConfigError(f"config: expected a mapping at top level, got {type(data).__name__}")
    unknown = sorted(set(data) - set(TOP_KEYS))
    if unknown:
        raise ConfigError(f"{unknown[0]}: unknown key")
    tag = data.get("preset")
    changes = {}
    for key, value in data.items():
        if key == "preset":
            continue
        if key == "profile":
            changes[key] = _profile(value)
        elif key == "field":
            changes[key] = _field(value)
        elif key == "mode":
            changes[key] = value
        elif key in ("t_max", "z_max"):
            changes[key] = None if value is None else _number(value, key)
        elif key in ("n_rays", "record_every", "smoothing"):
            changes[key] = _number(value, key, integer=True)
        else:
            changes[key] = _number(value, key)
    if tag is None:
        return ScenarioConfig(**changes)
    return _preset(tag).replace(**changes)


def config_to_dict(config: ScenarioConfig) -> dict:
    """Full explicit mapping; ``config_from_dict`` of it gives back ``config``."""
    return {
        "preset": config.preset,
        "epsilon": config.epsilon,
        "n_rays": config.n_rays,
        "span": config.span,
        "profile": {"type": config.profile.type, "offset": config.profile.offset},
        "field": field_to_dict(config.field),
        "mode": config.mode,
        "dt": config.dt,
        "t_max": config.t_max,
        "z_max": config.z_max,
        "record_every": config.record_every,
        "smoothing": config.smoothing,
        "caustic_min_spacing": config.caustic_min_spacing,
    }


def parse_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror or exc})") from exc
    try:
        data = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from exc
    return config_from_dict(data)


def emit_config(config: ScenarioConfig) -> str:
    return yaml.safe_dump(config_to_dict(config), sort_keys=False)
