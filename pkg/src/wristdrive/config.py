"""Runtime configuration: one small JSON file, strict about unknown keys."""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from pathlib import Path

from .controller import (
    DEFAULT_COMMAND_RATE_HZ,
    DEFAULT_OMEGA_MAX,
    DEFAULT_V_MAX,
    GainConfig,
    make_gains,
)
from .errors import DataError
from .gesture import DEFAULT_REFRACTORY_S, DEFAULT_THRESHOLD


class ConfigError(DataError):
    pass


@dataclass(frozen=True, slots=True)
class ControlConfig:
    """Every tunable the service accepts. All fields have safe defaults."""

    v_max: float = DEFAULT_V_MAX
    omega_max: float = DEFAULT_OMEGA_MAX
    mirror_roll: bool = False
    mirror_pitch: bool = False
    command_rate_hz: float = DEFAULT_COMMAND_RATE_HZ
    gesture_threshold: float = DEFAULT_THRESHOLD
    refractory_s: float = DEFAULT_REFRACTORY_S

    def __post_init__(self) -> None:
        if self.v_max <= 0.0:
            raise ConfigError("v_max must be positive")
        if self.omega_max <= 0.0:
            raise ConfigError("omega_max must be positive")
        if self.command_rate_hz <= 0.0:
            raise ConfigError("command_rate_hz must be positive")
        if not 0.0 < self.gesture_threshold <= 1.0:
            raise ConfigError("gesture_threshold must lie in (0, 1]")
        if self.refractory_s < 0.0:
            raise ConfigError("refractory_s must be >= 0")

    def gains(self) -> GainConfig:
        return make_gains(
            self.v_max, self.omega_max, self.mirror_roll, self.mirror_pitch
        )


_BOOL_FIELDS = {"mirror_roll", "mirror_pitch"}


def config_from_mapping(doc: dict) -> ControlConfig:
    if not isinstance(doc, dict):
        raise ConfigError("config root must be an object")
    known = {f.name for f in fields(ControlConfig)}
    unknown = set(doc) - known
    if unknown:
        raise ConfigError(f"unknown config key(s): {sorted(unknown)}")
    kwargs = {}
    for key, value in doc.items():
        if key in _BOOL_FIELDS:
            if not isinstance(value, bool):
                raise ConfigError(f"{key} must be a boolean")
            kwargs[key] = value
        else:
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{key} must be a number")
            kwargs[key] = float(value)
    return ControlConfig(**kwargs)


def load_config(path: str | Path) -> ControlConfig:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ConfigError(f"invalid JSON in config file: {exc}") from exc
    return config_from_mapping(doc)
