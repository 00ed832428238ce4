"""Pedal conditioning ahead of the vehicle model.

Throttle and brake each pass through a discrete first-order low-pass; the
filtered throttle then gets a constant idle term while the gear is in Drive
(automatic-transmission creep). Everything here is value-typed: callers hold
the filter states and thread them through successive frames.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from cuesim.errors import ValidationError

STEERING_LIMIT_DEG = 450.0


class Gear(str, enum.Enum):
    DRIVE = "D"
    NEUTRAL = "N"
    REVERSE = "R"


@dataclass(frozen=True)
class PedalFilterParams:
    time_constant: float
    step: float

    def __post_init__(self):
        if not (self.time_constant > 0 and math.isfinite(self.time_constant)):
            raise ValidationError(f"time_constant must be > 0, got {self.time_constant}")
        if not (self.step > 0 and math.isfinite(self.step)):
            raise ValidationError(f"step must be > 0, got {self.step}")

    @property
    def alpha(self) -> float:
        return self.step / (self.time_constant + self.step)


@dataclass(frozen=True)
class PedalFilterState:
    last_output: float = 0.0


@dataclass(frozen=True)
class DriverInput:
    throttle: float = 0.0
    brake: float = 0.0
    steering: float = 0.0  # wheel degrees, positive = counter-clockwise (left)
    gear: Gear = Gear.DRIVE

    def __post_init__(self):
        for name in ("throttle", "brake"):
            v = getattr(self, name)
            if not (math.isfinite(v) and 0.0 <= v <= 1.0):
                raise ValidationError(f"{name} must be within [0, 1], got {v}")
        if not (math.isfinite(self.steering) and abs(self.steering) <= STEERING_LIMIT_DEG):
            raise ValidationError(
                f"steering must be within ±{STEERING_LIMIT_DEG:g} deg, got {self.steering}"
            )
        if not isinstance(self.gear, Gear):
            try:
                object.__setattr__(self, "gear", Gear(self.gear))
            except ValueError:
                raise ValidationError(f"gear must be one of D/N/R, got {self.gear!r}") from None


@dataclass(frozen=True)
class ConditionedCommand:
    drive_demand: float = 0.0
    brake_demand: float = 0.0


@dataclass(frozen=True)
class ConditioningParams:
    throttle: PedalFilterParams
    brake: PedalFilterParams
    idle: float = 0.05

    def __post_init__(self):
        if not (math.isfinite(self.idle) and self.idle >= 0):
            raise ValidationError(f"idle must be >= 0, got {self.idle}")

    @classmethod
    def from_time_constants(
        cls, time_constant: float, step: float, idle: float = 0.05,
        brake_time_constant: float | None = None,
    ) -> "ConditioningParams":
        if brake_time_constant is None:
            brake_time_constant = time_constant
        return cls(
            throttle=PedalFilterParams(time_constant, step),
            brake=PedalFilterParams(brake_time_constant, step),
            idle=idle,
        )


def low_pass_step(
    state: PedalFilterState, x: float, params: PedalFilterParams
) -> tuple[float, PedalFilterState]:
    """Advance the pedal filter one frame: ``y = y_prev + alpha * (x - y_prev)``."""
    if not math.isfinite(x):
        raise ValidationError(f"filter input must be finite, got {x}")
    y = state.last_output + params.alpha * (x - state.last_output)
    return y, PedalFilterState(y)


def condition_pedals(
    inp: DriverInput,
    throttle_state: PedalFilterState,
    brake_state: PedalFilterState,
    params: ConditioningParams,
) -> tuple[ConditionedCommand, PedalFilterState, PedalFilterState]:
    throttle, throttle_state = low_pass_step(throttle_state, inp.throttle, params.throttle)
    brake, brake_state = low_pass_step(brake_state, inp.brake, params.brake)
    # idle is added after the filter, and only in Drive
    idle = params.idle if inp.gear is Gear.DRIVE else 0.0
    return ConditionedCommand(throttle + idle, brake), throttle_state, brake_state
