"""Run configuration: YAML on disk, validated with pydantic.

Unknown keys are rejected so a typo in an experiment file fails loudly
instead of silently running with a default.
"""

from __future__ import annotations

from pathlib import Path
from typing import Literal, Optional

import yaml
from pydantic import BaseModel, ConfigDict, Field, PositiveFloat, ValidationError as PydanticError

from cuesim.errors import ValidationError


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class InputSection(_Section):
    time_constant_s: PositiveFloat = 0.2
    idle_drive: float = Field(0.05, ge=0)
    brake_time_constant_s: Optional[PositiveFloat] = None


class VehicleSection(_Section):
    wheelbase_m: PositiveFloat = 2.7
    max_drive_accel: PositiveFloat = 4.0
    max_brake_decel: PositiveFloat = 8.0
    drag_coefficient: PositiveFloat = 0.0025
    max_steer_road_angle_deg: float = Field(35.0, gt=0, lt=90)
    reverse_speed_cap_mps: PositiveFloat = 5.0
    haptic_freq_per_mps: float = Field(2.0, ge=0)
    haptic_mag_per_mps: float = Field(0.025, ge=0)
    haptic_freq_cap_hz: float = Field(60.0, ge=0)


class CueingSection(_Section):
    pitch_gain: float = Field(1.5, ge=0)
    roll_gain: float = Field(1.5, ge=0)
    yaw_gain: float = Field(1.0, ge=0)
    hp_time_constant_s: PositiveFloat = 1.0
    subthreshold_deg_s: PositiveFloat = 2.0
    roll_source: Literal["centripetal", "differenced", "sum"] = "centripetal"


class PlatformSection(_Section):
    pitch_min_deg: float = -4.4
    pitch_max_deg: float = 6.6
    roll_min_deg: float = -9.0
    roll_max_deg: float = 9.0
    yaw_min_deg: float = -10.0
    yaw_max_deg: float = 10.0
    motor_range_deg: PositiveFloat = 20.0
    motor_rate_deg_s: PositiveFloat = 80.0
    dead_zone_deg: float = Field(0.1, ge=0)
    clip_deg: PositiveFloat = 20.0
    smoothing_time_constant_s: float = Field(0.0, ge=0)
    power_usage: float = Field(100.0, ge=0)


class SchedulerSection(_Section):
    display_hz: PositiveFloat = 90.0
    fixed_step_s: PositiveFloat = 0.02
    mode: Literal["physics_on_update", "default_fixed_step"] = "physics_on_update"
    frame_buffers: int = Field(1, ge=0)
    vsync: bool = True
    # per-frame compute time; defaults to 80% of the display period
    frame_time_ms: Optional[PositiveFloat] = None
    jitter_ms: float = Field(0.0, ge=0)
    frame_times_ms: Optional[list[PositiveFloat]] = None


class TurnEntry(_Section):
    sweep: Literal[30, 60, 90]
    slope: Literal["incline", "decline", "plateau"]
    direction: Literal["left", "right"]


class TrackSection(_Section):
    straight_length_m: PositiveFloat = 150.0
    grade: float = Field(0.05, ge=0, lt=1)
    lane_width_m: PositiveFloat = 3.5
    lanes: int = Field(4, ge=2)
    transition_length_m: PositiveFloat = 40.0
    turns: Optional[list[TurnEntry]] = None


class DriverSection(_Section):
    kind: Literal["scripted", "random"] = "scripted"
    lookahead_m: PositiveFloat = 10.0
    target_speed_mps: float = Field(25.0, ge=0)
    speed_gain: PositiveFloat = 0.3
    lane: int = Field(1, ge=1)


class RunSection(_Section):
    duration_s: float = Field(60.0, ge=0)
    seed: int = Field(0, ge=0, lt=2**64)
    output_dir: str = "out"


class RunConfig(_Section):
    input: InputSection = InputSection()
    vehicle: VehicleSection = VehicleSection()
    cueing: CueingSection = CueingSection()
    platform: PlatformSection = PlatformSection()
    scheduler: SchedulerSection = SchedulerSection()
    track: TrackSection = TrackSection()
    driver: DriverSection = DriverSection()
    run: RunSection = RunSection()


def _format_errors(exc: PydanticError) -> str:
    lines = []
    for err in exc.errors():
        path = ".".join(str(p) for p in err["loc"]) or "<root>"
        lines.append(f"{path}: {err['msg']}")
    return "; ".join(lines)


def parse_config(data: dict | None) -> RunConfig:
    try:
        return RunConfig.model_validate(data or {})
    except PydanticError as exc:
        raise ValidationError(_format_errors(exc)) from None


def load_config(path: str | Path | None) -> RunConfig:
    if path is None:
        return RunConfig()
    try:
        data = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    except (OSError, yaml.YAMLError) as exc:
        raise ValidationError(f"cannot read config {path}: {exc}") from None
    if data is not None and not isinstance(data, dict):
        raise ValidationError("config root must be a mapping")
    return parse_config(data)


def with_overrides(cfg: RunConfig, changes: dict) -> RunConfig:
    """Copy with ``section.key`` style overrides, re-validated, e.g. ``{"run.seed": 3}``."""
    data = cfg.model_dump()
    for dotted, value in changes.items():
        section, key = dotted.split(".", 1)
        data[section][key] = value
    return parse_config(data)
