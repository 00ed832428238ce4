"""Kinematic bicycle stand-in for the rig's rigid-body vehicle simulation.

Frames and signs used throughout the package:

* World frame: x east, y north, z up. Heading is measured counter-clockwise
  from +x and kept in (-pi, pi].
* Body frame: longitudinal is forward, lateral is positive to the left,
  vertical is up. A left turn therefore has positive yaw rate and positive
  centripetal (lateral) acceleration.
* Steering wheel angle is positive counter-clockwise (turning left).

The cueing chain only needs accelerations and yaw rate, so there is no tyre,
suspension or powertrain model. Speed is integrated with quadratic drag and
the pose follows with semi-implicit Euler at the frame step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from cuesim.conditioning import STEERING_LIMIT_DEG, ConditionedCommand, Gear
from cuesim.errors import ValidationError

GRAVITY = 9.81

Vec3 = tuple[float, float, float]


@dataclass(frozen=True)
class VehicleParams:
    wheelbase: float = 2.7
    max_drive_accel: float = 4.0
    max_brake_decel: float = 8.0
    # 4 m/s^2 / 40^2: full throttle tops out near 40 m/s
    drag_coefficient: float = 0.0025
    max_steer_road_angle: float = 35.0
    reverse_speed_cap: float = 5.0

    def __post_init__(self):
        for name in ("wheelbase", "max_drive_accel", "max_brake_decel",
                     "drag_coefficient", "max_steer_road_angle", "reverse_speed_cap"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v > 0):
                raise ValidationError(f"vehicle.{name} must be > 0, got {v}")
        if self.max_steer_road_angle >= 90:
            raise ValidationError("vehicle.max_steer_road_angle must be < 90 deg")


@dataclass(frozen=True)
class VehicleState:
    position: Vec3 = (0.0, 0.0, 0.0)
    velocity: Vec3 = (0.0, 0.0, 0.0)
    heading: float = 0.0
    yaw_rate: float = 0.0
    speed: float = 0.0

    @property
    def signed_speed(self) -> float:
        """Horizontal speed, negative when moving backwards relative to heading."""
        along = self.velocity[0] * math.cos(self.heading) + self.velocity[1] * math.sin(self.heading)
        return -self.speed if along < 0 else self.speed


@dataclass(frozen=True)
class BodyAccel:
    longitudinal: float = 0.0
    lateral: float = 0.0
    vertical: float = 0.0


@dataclass(frozen=True)
class HapticCalibration:
    freq_per_mps: float = 2.0
    mag_per_mps: float = 0.025
    freq_cap: float = 60.0
    mag_cap: float = 1.0


@dataclass(frozen=True)
class HapticCue:
    frequency: float
    magnitude: float


def normalize_angle(a: float) -> float:
    """Wrap to (-pi, pi]."""
    a = math.remainder(a, math.tau)
    return math.pi if a == -math.pi else a


def road_wheel_angle(steering: float, params: VehicleParams) -> float:
    """Road-wheel angle in radians for a steering-wheel angle in degrees."""
    return math.radians(steering / STEERING_LIMIT_DEG * params.max_steer_road_angle)


def steering_for_road_angle(delta: float, params: VehicleParams) -> float:
    """Inverse of :func:`road_wheel_angle`, clipped to the wheel's travel."""
    steering = math.degrees(delta) / params.max_steer_road_angle * STEERING_LIMIT_DEG
    return max(-STEERING_LIMIT_DEG, min(STEERING_LIMIT_DEG, steering))


_GEAR_SIGN = {Gear.DRIVE: 1.0, Gear.NEUTRAL: 0.0, Gear.REVERSE: -1.0}


def step_vehicle(
    state: VehicleState,
    cmd: ConditionedCommand,
    steering: float,
    params: VehicleParams,
    dt: float,
    gear: Gear = Gear.DRIVE,
    grade: float = 0.0,
) -> VehicleState:
    if not dt > 0:
        raise ValidationError(f"dt must be > 0, got {dt}")

    v = state.signed_speed
    propulsion = _GEAR_SIGN[gear] * cmd.drive_demand * params.max_drive_accel
    propulsion -= GRAVITY * grade / math.sqrt(1.0 + grade * grade)
    v_new = v + propulsion * dt

    # brake and drag oppose motion and can only bring the car to rest
    resist = (cmd.brake_demand * params.max_brake_decel + params.drag_coefficient * v * v) * dt
    if v_new > 0:
        v_new = max(0.0, v_new - resist)
    elif v_new < 0:
        v_new = min(0.0, v_new + resist)
    v_new = max(v_new, -params.reverse_speed_cap)

    delta = road_wheel_angle(steering, params)
    yaw_rate = v_new * math.tan(delta) / params.wheelbase
    heading = normalize_angle(state.heading + yaw_rate * dt)
    velocity = (v_new * math.cos(heading), v_new * math.sin(heading), v_new * grade)
    x, y, z = state.position
    position = (x + velocity[0] * dt, y + velocity[1] * dt, z + velocity[2] * dt)
    return VehicleState(position, velocity, heading, yaw_rate, abs(v_new))


def extrapolate_state(state: VehicleState, horizon: float) -> VehicleState:
    """Dead-reckon forward ``horizon`` seconds at constant speed and yaw rate."""
    if horizon == 0:
        return state
    v = state.signed_speed
    heading = normalize_angle(state.heading + state.yaw_rate * horizon)
    velocity = (v * math.cos(heading), v * math.sin(heading), state.velocity[2])
    x, y, z = state.position
    position = (x + velocity[0] * horizon, y + velocity[1] * horizon, z + velocity[2] * horizon)
    return VehicleState(position, velocity, heading, state.yaw_rate, state.speed)


def accel_by_differencing(v_prev: Vec3, v_curr: Vec3, heading: float, dt: float) -> BodyAccel:
    """Finite-difference acceleration between two frames, in the body frame."""
    if not dt > 0:
        raise ValidationError(f"dt must be > 0, got {dt}")
    ax = (v_curr[0] - v_prev[0]) / dt
    ay = (v_curr[1] - v_prev[1]) / dt
    az = (v_curr[2] - v_prev[2]) / dt
    c, s = math.cos(heading), math.sin(heading)
    return BodyAccel(ax * c + ay * s, -ax * s + ay * c, az)


def centripetal_accel(speed: float, yaw_rate: float) -> float:
    return speed * yaw_rate


def haptic_cue(speed: float, calibration: HapticCalibration = HapticCalibration()) -> HapticCue:
    if speed < 0:
        raise ValidationError(f"speed must be >= 0, got {speed}")
    return HapticCue(
        frequency=min(calibration.freq_cap, calibration.freq_per_mps * speed),
        magnitude=min(calibration.mag_cap, calibration.mag_per_mps * speed),
    )
