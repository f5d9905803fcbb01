"""Scenario configuration: typed parameter tree with strict JSON round-tripping.

Unknown keys are rejected so experiment files stay an exact record of
what ran.  Parse -> serialize -> parse is the identity.
"""

from __future__ import annotations

import dataclasses
import json
import typing
from dataclasses import dataclass, field
from pathlib import Path


class ConfigError(ValueError):
    """Raised for malformed or out-of-range configuration input."""


BASE_AV_1 = "base_av_1"
BASE_AV_2 = "base_av_2"
SITUATION_AWARE = "situation_aware"
CONTROLLER_KINDS = (BASE_AV_1, BASE_AV_2, SITUATION_AWARE)

FOLLOWER_AGGRESSIVE = "aggressive"
FOLLOWER_CALM = "calm"
FOLLOWER_NONE = "none"


@dataclass(frozen=True)
class LayoutConfig:
    lane_width: float = 3.6
    major_lanes_per_direction: int = 2
    minor_lanes: int = 1
    major_length: float = 337.0
    major_speed_limit: float = 13.4
    minor_speed_limit: float = 7.0
    stop_line_position: float = 337.0


@dataclass(frozen=True)
class ConflictConfig:
    edge_margin: float = 0.6
    approach_buffer: float = 1.2
    formula: str = "verbatim"


@dataclass(frozen=True)
class IntentConfig:
    accel_mean_aggressive: float = 2.0
    accel_mean_calm: float = -2.0
    accel_sd: float = 4.0 / 3.0
    headway_mean_aggressive: float = 1.0
    headway_mean_calm: float = 2.0
    headway_sd: float = 0.5
    prior_aggressive: float = 0.5
    prior_calm: float = 0.5
    classify_threshold: float = 0.5
    speed_floor: float = 0.1


@dataclass(frozen=True)
class InflowConfig:
    v_end_min: float = 0.1
    v_end_max: float = 2.5
    j0_min: float = -1.5
    j0_max: float = 1.5
    slope_min: float = 0.1
    slope_max: float = 0.8
    t_max: float = 60.0


@dataclass(frozen=True)
class OutflowConfig:
    v_end_min: float = 6.0
    v_end_max: float = 7.0
    j0_min: float = -1.5
    j0_max: float = 1.5
    slope_min: float = -0.6
    slope_max: float = -0.2
    t_min: float = 5.0
    t_max: float = 60.0


@dataclass(frozen=True)
class BaseAvConfig:
    entry_speed: float = 12.5
    v_in_min: float = 11.5
    v_in_max: float = 12.5
    a_in_min: float = 0.5
    a_in_max: float = 1.5
    t_max: float = 60.0
    reaction_time: float = 0.5
    brake_decel: float = -1.5
    comfort_accel: float = 0.5
    comfort_decel: float = 1.0
    gap_rule_s: float = 5.0
    turn_accel: float = 2.2
    turn_speed: float = 6.0


@dataclass(frozen=True)
class CavConfig:
    speed_margin: float = 2.24
    trapezoid_accel: float = 1.0
    safety_margin: float = 0.5
    # slack on predicted conflict-clearing times at planning: car-following
    # only delays opposing vehicles, never hastens them, so plans must not
    # lean on a vehicle clearing just barely before the crossing
    plan_pass_slack: float = 1.5
    replan_period: float = 0.5
    rear_camera_range: float = 200.0
    front_sensing_range: float = 200.0
    rsu_range: float = 300.0
    plan_horizon: float = 90.0


@dataclass(frozen=True)
class FollowerConfig:
    mode: str = FOLLOWER_AGGRESSIVE
    start_offset: float = 8.0
    launch_accel: float = 2.5
    hard_brake_gap: float = 12.0
    hard_brake_ttc: float = 1.5
    hard_brake_decel: float = -6.0
    release_gap: float = 15.0
    length: float = 4.6
    width: float = 1.8


@dataclass(frozen=True)
class IdmConfig:
    max_accel: float = 1.5
    comfort_decel: float = 2.0
    min_gap: float = 2.0
    desired_headway: float = 1.5
    exponent: float = 4.0
    accel_floor: float = -8.0


@dataclass(frozen=True)
class TrafficConfig:
    speed_mean_frac: float = 0.9
    speed_sd_frac: float = 0.2 / 1.96
    speed_lo_frac: float = 0.5
    speed_hi_frac: float = 1.2
    min_headway: float = 1.0
    spawn_distance: float = 350.0
    despawn_past: float = 80.0
    vehicle_length: float = 4.6
    vehicle_width: float = 1.8
    idm: IdmConfig = field(default_factory=IdmConfig)


@dataclass(frozen=True)
class DetectorConfig:
    threshold_decel: float = -4.5
    min_duration: float = 0.3
    release_decel: float = -2.0


@dataclass(frozen=True)
class SubjectConfig:
    length: float = 4.6
    width: float = 1.8


@dataclass(frozen=True)
class ScenarioConfig:
    volumes: tuple = (600, 800, 1000)
    controllers: tuple = CONTROLLER_KINDS
    runs_per_cell: int = 30
    base_seed: int = 42
    dt: float = 0.1
    sim_time_cap: float = 300.0
    layout: LayoutConfig = field(default_factory=LayoutConfig)
    conflict: ConflictConfig = field(default_factory=ConflictConfig)
    intent: IntentConfig = field(default_factory=IntentConfig)
    inflow: InflowConfig = field(default_factory=InflowConfig)
    outflow: OutflowConfig = field(default_factory=OutflowConfig)
    base_av: BaseAvConfig = field(default_factory=BaseAvConfig)
    cav: CavConfig = field(default_factory=CavConfig)
    follower: FollowerConfig = field(default_factory=FollowerConfig)
    traffic: TrafficConfig = field(default_factory=TrafficConfig)
    detector: DetectorConfig = field(default_factory=DetectorConfig)
    subject: SubjectConfig = field(default_factory=SubjectConfig)

    def __post_init__(self) -> None:
        if not self.volumes:
            raise ConfigError("volumes must be non-empty")
        if any(v <= 0 for v in self.volumes):
            raise ConfigError("volumes must be positive")
        if not self.controllers:
            raise ConfigError("controllers must be non-empty")
        for c in self.controllers:
            if c not in CONTROLLER_KINDS:
                raise ConfigError(f"unknown controller {c!r}; expected one of {CONTROLLER_KINDS}")
        if len(set(self.controllers)) != len(self.controllers):
            raise ConfigError("controllers must be unique")
        if len(set(self.volumes)) != len(self.volumes):
            raise ConfigError("volumes must be unique")
        if self.runs_per_cell <= 0:
            raise ConfigError("runs_per_cell must be positive")
        if not 0.0 < self.dt <= 0.5:
            raise ConfigError("dt must lie in (0, 0.5]")
        if self.sim_time_cap <= 0.0:
            raise ConfigError("sim_time_cap must be positive")
        if self.follower.mode not in (FOLLOWER_AGGRESSIVE, FOLLOWER_CALM, FOLLOWER_NONE):
            raise ConfigError(f"unknown follower mode {self.follower.mode!r}")
        if self.conflict.formula not in ("verbatim", "linearized"):
            raise ConfigError(f"unknown conflict formula {self.conflict.formula!r}")


_TUPLE_FIELDS = {"volumes", "controllers"}


def _from_dict(cls, data, path=""):
    if not isinstance(data, dict):
        raise ConfigError(f"{path or 'config'}: expected an object, got {type(data).__name__}")
    hints = typing.get_type_hints(cls)
    known = {f.name for f in dataclasses.fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"{path or 'config'}: unknown keys {sorted(unknown)}")
    kwargs = {}
    for name in known:
        if name not in data:
            continue
        value = data[name]
        sub = hints.get(name)
        if isinstance(sub, type) and dataclasses.is_dataclass(sub):
            kwargs[name] = _from_dict(sub, value, f"{path}{name}.")
        elif name in _TUPLE_FIELDS:
            if not isinstance(value, list):
                raise ConfigError(f"{path}{name}: expected a list")
            kwargs[name] = tuple(value)
        else:
            kwargs[name] = value
    try:
        return cls(**kwargs)
    except (TypeError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"{path or 'config'}: {exc}") from exc


def _to_jsonable(obj):
    if dataclasses.is_dataclass(obj):
        return {f.name: _to_jsonable(getattr(obj, f.name)) for f in dataclasses.fields(obj)}
    if isinstance(obj, tuple):
        return [_to_jsonable(v) for v in obj]
    return obj


def config_from_dict(data: dict) -> ScenarioConfig:
    return _from_dict(ScenarioConfig, data)


def config_to_dict(config: ScenarioConfig) -> dict:
    return _to_jsonable(config)


def load_config(path) -> ScenarioConfig:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid JSON: {exc}") from exc
    return config_from_dict(data)


def save_config(config: ScenarioConfig, path) -> None:
    Path(path).write_text(json.dumps(config_to_dict(config), indent=2) + "\n", encoding="utf-8")


def default_config() -> ScenarioConfig:
    return ScenarioConfig()
