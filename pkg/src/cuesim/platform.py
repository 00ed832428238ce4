"""Kinematics and servo shaping for the three-motor moving base.

The two front motors share an axle: moving together they pitch the seat,
moving against each other they roll it. The rear motor swings the whole
assembly for yaw. Motor-to-pose maps are linear and symmetric, scaled so that
full motor travel (20 deg) gives the largest published pose angle on each
axis; the asymmetric pitch range is enforced purely as a pose-space clamp so
that zero motors always means zero pose.

Per-frame command path: ``clamp_pose -> inverse_kinematics ->
apply_servo_shaping -> rate_limit_step`` and the achieved pose is the forward
kinematics of what comes out. Rate limiting is last because it stands for the
physical motors. The rear motor is rate limited at the motor, so the
platform's yaw rate tops out at half the motor rate (40 deg/s by default).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from cuesim.errors import ValidationError


@dataclass(frozen=True)
class PlatformLimits:
    pitch_range: tuple[float, float] = (-4.4, 6.6)
    roll_range: tuple[float, float] = (-9.0, 9.0)
    yaw_range: tuple[float, float] = (-10.0, 10.0)
    motor_range: tuple[float, float] = (-20.0, 20.0)
    motor_rate: float = 80.0  # deg/s

    def __post_init__(self):
        for name in ("pitch_range", "roll_range", "yaw_range", "motor_range"):
            lo, hi = getattr(self, name)
            if not (math.isfinite(lo) and math.isfinite(hi) and lo <= 0 <= hi and lo < hi):
                raise ValidationError(f"platform.{name} must be an ordered interval containing 0")
        if self.motor_range[0] != -self.motor_range[1]:
            raise ValidationError("platform.motor_range must be symmetric")
        if not (math.isfinite(self.motor_rate) and self.motor_rate > 0):
            raise ValidationError("platform.motor_rate must be > 0")

    @property
    def motor_max(self) -> float:
        return self.motor_range[1]

    # Pose degrees per motor degree. The positive pitch end and the symmetric
    # roll/yaw ends are reached at full motor travel.
    @property
    def k_pitch(self) -> float:
        return self.pitch_range[1] / self.motor_max

    @property
    def k_roll(self) -> float:
        return max(-self.roll_range[0], self.roll_range[1]) / self.motor_max

    @property
    def k_yaw(self) -> float:
        return max(-self.yaw_range[0], self.yaw_range[1]) / self.motor_max


@dataclass(frozen=True)
class PlatformPose:
    pitch: float = 0.0
    roll: float = 0.0
    yaw: float = 0.0


@dataclass(frozen=True)
class MotorAngles:
    front_left: float = 0.0
    front_right: float = 0.0
    rear: float = 0.0

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.front_left, self.front_right, self.rear)


@dataclass(frozen=True)
class ServoParams:
    dead_zone: float = 0.1
    clip: float = 20.0
    smoothing_time_constant: float = 0.0
    # accepted for parity with the vendor servo tool; no kinematic effect
    power_usage: float = 100.0

    def __post_init__(self):
        if not (math.isfinite(self.dead_zone) and self.dead_zone >= 0):
            raise ValidationError("platform.dead_zone must be >= 0")
        if not (math.isfinite(self.clip) and self.clip > 0):
            raise ValidationError("platform.clip must be > 0")
        if not (math.isfinite(self.smoothing_time_constant) and self.smoothing_time_constant >= 0):
            raise ValidationError("platform.smoothing_time_constant_s must be >= 0")

    def check_against(self, limits: PlatformLimits) -> None:
        if self.clip > limits.motor_max:
            raise ValidationError(
                f"platform.clip ({self.clip}) exceeds motor range ({limits.motor_max})"
            )


@dataclass(frozen=True)
class ServoState:
    smoothed: MotorAngles = field(default_factory=MotorAngles)


def _clamp(x: float, lo: float, hi: float) -> float:
    return lo if x < lo else hi if x > hi else x


def clamp_pose(pose: PlatformPose, limits: PlatformLimits) -> PlatformPose:
    return PlatformPose(
        _clamp(pose.pitch, *limits.pitch_range),
        _clamp(pose.roll, *limits.roll_range),
        _clamp(pose.yaw, *limits.yaw_range),
    )


def inverse_kinematics(pose: PlatformPose, limits: PlatformLimits) -> MotorAngles:
    """Motor angles for an (already clamped) pose.

    If pitch and roll together ask for more than full travel on a front
    motor, common and differential parts are scaled down together so the
    roll:pitch ratio survives.
    """
    common = pose.pitch / limits.k_pitch
    diff = pose.roll / limits.k_roll
    total = abs(common) + abs(diff)
    if total > limits.motor_max:
        scale = limits.motor_max / total
        common *= scale
        diff *= scale
    rear = _clamp(pose.yaw / limits.k_yaw, *limits.motor_range)
    return MotorAngles(common + diff, common - diff, rear)


def forward_kinematics(motors: MotorAngles, limits: PlatformLimits = PlatformLimits()) -> PlatformPose:
    return PlatformPose(
        pitch=limits.k_pitch * (motors.front_left + motors.front_right) / 2,
        roll=limits.k_roll * (motors.front_left - motors.front_right) / 2,
        yaw=limits.k_yaw * motors.rear,
    )


def rate_limit_step(
    prev: MotorAngles, target: MotorAngles, dt: float, limits: PlatformLimits
) -> MotorAngles:
    if not dt > 0:
        raise ValidationError(f"dt must be > 0, got {dt}")
    step = limits.motor_rate * dt
    return MotorAngles(*(
        p + _clamp(t - p, -step, step) for p, t in zip(prev.as_tuple(), target.as_tuple())
    ))


def apply_servo_shaping(
    cmd: MotorAngles, state: ServoState, params: ServoParams, dt: float
) -> tuple[MotorAngles, ServoState]:
    """Dead zone (hard zero), symmetric clip, then optional first-order smoothing."""
    if not dt > 0:
        raise ValidationError(f"dt must be > 0, got {dt}")
    shaped = []
    for x in cmd.as_tuple():
        if abs(x) < params.dead_zone:
            x = 0.0
        shaped.append(_clamp(x, -params.clip, params.clip))
    if params.smoothing_time_constant > 0:
        alpha = dt / (params.smoothing_time_constant + dt)
        shaped = [y + alpha * (x - y) for x, y in zip(shaped, state.smoothed.as_tuple())]
    out = MotorAngles(*shaped)
    return out, ServoState(out)


def within_limits(pose: PlatformPose, limits: PlatformLimits, tol: float = 1e-9) -> bool:
    return (
        limits.pitch_range[0] - tol <= pose.pitch <= limits.pitch_range[1] + tol
        and limits.roll_range[0] - tol <= pose.roll <= limits.roll_range[1] + tol
        and limits.yaw_range[0] - tol <= pose.yaw <= limits.yaw_range[1] + tol
    )
