"""Run configuration: one JSON document, strictly validated.

Every section maps onto a frozen dataclass; unknown keys are rejected so a
typo cannot silently fall back to a default. Angles are in radians.
"""
from __future__ import annotations

import dataclasses
import json
import typing
from dataclasses import asdict, dataclass, field, replace

from .end_row import EndRowConfig
from .in_row import InRowConfig
from .navigator import NavConfig
from .odometry import KinematicParams
from .scan import FilterConfig
from .simulator import DynamicsConfig, SensorConfig, WorldConfig
from .turn import TurnConfig


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    world: WorldConfig = field(default_factory=WorldConfig)
    sensor: SensorConfig = field(default_factory=SensorConfig)
    filter: FilterConfig = field(default_factory=FilterConfig)
    dynamics: DynamicsConfig = field(default_factory=DynamicsConfig)
    kinematics: KinematicParams = field(default_factory=KinematicParams)
    in_row: InRowConfig = field(default_factory=InRowConfig)
    turn: TurnConfig = field(default_factory=TurnConfig)
    end_row: EndRowConfig = field(default_factory=EndRowConfig)
    corridors_to_traverse: int = 3
    degraded_timeout: float = 1.5
    start_offset: float = 0.5
    max_time: float = 600.0
    seed: int = 0
    output_dir: str = "runs/default"

    def __post_init__(self):
        if self.corridors_to_traverse < 1:
            raise ValueError("corridors_to_traverse must be >= 1")
        if self.corridors_to_traverse > self.world.n_rows - 1:
            raise ValueError("corridors_to_traverse exceeds the corridors in the world")
        if not self.max_time > 0:
            raise ValueError("max_time must be > 0")

    @property
    def nav(self) -> NavConfig:
        return NavConfig(self.in_row, self.turn, self.end_row, self.corridors_to_traverse, self.degraded_timeout)

    def with_seed(self, seed: int) -> "RunConfig":
        """Same configuration with every random source re-seeded from ``seed``."""
        return replace(self, seed=seed, world=replace(self.world, seed=seed),
                       end_row=replace(self.end_row, rng_seed=seed))

    def to_dict(self) -> dict:
        return asdict(self)


def _build(cls, data, path: str):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or '<root>'}: expected an object, got {type(data).__name__}")
    hints = typing.get_type_hints(cls)
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(data) - names)
    if unknown:
        raise ConfigError(f"{path or '<root>'}: unknown field(s) {', '.join(unknown)}")
    kwargs = {}
    for name, value in data.items():
        hint = hints[name]
        where = f"{path}.{name}" if path else name
        if dataclasses.is_dataclass(hint):
            kwargs[name] = _build(hint, value, where)
        else:
            kwargs[name] = _coerce(hint, value, where)
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path or '<root>'}: {exc}") from None


def _coerce(hint, value, where):
    origin = typing.get_origin(hint)
    if origin is tuple:
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected a list")
        return tuple(float(v) for v in value)
    if hint is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number")
        return float(value)
    if hint is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer")
        return value
    if hint is str:
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string")
        return value
    return value


def config_from_dict(data: dict) -> RunConfig:
    return _build(RunConfig, data, "")


def load_config(path) -> RunConfig:
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from None
    except OSError as exc:
        raise ConfigError(f"{path}: {exc.strerror}") from None
    return config_from_dict(data)


def dump_config(cfg: RunConfig) -> str:
    return json.dumps(cfg.to_dict(), indent=2, sort_keys=True) + "\n"
