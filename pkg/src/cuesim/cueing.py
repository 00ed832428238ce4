"""Custom 3-DOF cueing: direct tilt for pitch/roll, washout for yaw.

Pitch and roll are plain scaled copies of this frame's acceleration, with no
temporal filtering at all, so that what the seat does always matches what the
headset shows. Only yaw is washed out: a first-order high-pass on yaw rate is
integrated into a yaw command, which is then pulled back toward zero at a
rate the occupant should not perceive.

Sign conventions for the pose request:

* pitch > 0 is nose down. Forward acceleration tilts the seat back
  (negative pitch) so gravity presses the driver into the backrest.
* roll > 0 is right side down. A left turn (positive centripetal
  acceleration) rolls right, giving the outward push of the turn.
* yaw > 0 is counter-clockwise, matching the vehicle.

Nothing in this module clamps; :mod:`cuesim.platform` owns all limits, and
because tilt is unfiltered a differencing spike passes straight through to it.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from cuesim.errors import ValidationError
from cuesim.vehicle import BodyAccel, centripetal_accel


class RollSource(str, enum.Enum):
    CENTRIPETAL = "centripetal"
    DIFFERENCED = "differenced"
    SUM = "sum"


@dataclass(frozen=True)
class CueGains:
    pitch_gain: float = 1.5  # deg per m/s^2
    roll_gain: float = 1.5  # deg per m/s^2
    roll_source: RollSource = RollSource.CENTRIPETAL

    def __post_init__(self):
        for name in ("pitch_gain", "roll_gain"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValidationError(f"cueing.{name} must be >= 0, got {v}")
        object.__setattr__(self, "roll_source", RollSource(self.roll_source))


@dataclass(frozen=True)
class WashoutParams:
    time_constant: float = 1.0
    subthreshold_rate: float = 2.0  # deg/s
    yaw_gain: float = 1.0  # platform yaw deg per vehicle yaw deg

    def __post_init__(self):
        if not (math.isfinite(self.time_constant) and self.time_constant > 0):
            raise ValidationError(f"high-pass time constant must be > 0, got {self.time_constant}")
        if not (math.isfinite(self.subthreshold_rate) and self.subthreshold_rate > 0):
            raise ValidationError(f"subthreshold rate must be > 0, got {self.subthreshold_rate}")
        if not (math.isfinite(self.yaw_gain) and self.yaw_gain >= 0):
            raise ValidationError(f"yaw gain must be >= 0, got {self.yaw_gain}")


@dataclass(frozen=True)
class HighPassState:
    last_input: float = 0.0
    last_output: float = 0.0


@dataclass(frozen=True)
class YawWashoutState:
    hp: HighPassState = field(default_factory=HighPassState)
    yaw_cmd: float = 0.0


@dataclass(frozen=True)
class CueTarget:
    pitch: float = 0.0
    roll: float = 0.0
    yaw: float = 0.0


def tilt_cues(accel: BodyAccel, centripetal: float, gains: CueGains) -> tuple[float, float]:
    """Return ``(pitch, roll)`` in degrees. Memoryless by design."""
    pitch = -gains.pitch_gain * accel.longitudinal
    if gains.roll_source is RollSource.CENTRIPETAL:
        lateral = centripetal
    elif gains.roll_source is RollSource.DIFFERENCED:
        lateral = accel.lateral
    else:
        lateral = centripetal + accel.lateral
    return pitch, gains.roll_gain * lateral


def high_pass_step(
    state: HighPassState, x: float, time_constant: float, dt: float
) -> tuple[float, HighPassState]:
    if not dt > 0 or not time_constant > 0:
        raise ValidationError("high_pass_step needs dt > 0 and time_constant > 0")
    beta = time_constant / (time_constant + dt)
    y = beta * (state.last_output + x - state.last_input)
    return y, HighPassState(x, y)


def yaw_washout_step(
    state: YawWashoutState, yaw_rate: float, params: WashoutParams, dt: float
) -> tuple[float, YawWashoutState]:
    """Integrate high-passed yaw rate, then creep back toward zero.

    The return step is at most ``subthreshold_rate * dt`` degrees and never
    crosses zero.
    """
    hp, hp_state = high_pass_step(state.hp, yaw_rate, params.time_constant, dt)
    yaw = state.yaw_cmd + params.yaw_gain * math.degrees(hp) * dt
    back = params.subthreshold_rate * dt
    if yaw > 0:
        yaw = max(0.0, yaw - back)
    elif yaw < 0:
        yaw = min(0.0, yaw + back)
    return yaw, YawWashoutState(hp_state, yaw)


def compose_cue_frame(
    accel: BodyAccel,
    speed: float,
    yaw_rate: float,
    state: YawWashoutState,
    gains: CueGains,
    washout: WashoutParams,
    dt: float,
) -> tuple[CueTarget, YawWashoutState]:
    pitch, roll = tilt_cues(accel, centripetal_accel(speed, yaw_rate), gains)
    yaw, state = yaw_washout_step(state, yaw_rate, washout, dt)
    return CueTarget(pitch, roll, yaw), state
