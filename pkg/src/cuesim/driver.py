"""Input sources standing in for the human at the wheel.

:class:`ScriptedDriver` follows a lane of the test loop with pure pursuit and
a proportional speed loop, always in Drive. :class:`RandomDriver` produces
smooth seeded pedal and steering noise and is used to stress the platform
chain away from any track.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from cuesim.conditioning import STEERING_LIMIT_DEG, DriverInput, Gear
from cuesim.errors import ValidationError
from cuesim.track import Track, sample_track
from cuesim.vehicle import GRAVITY, VehicleParams, VehicleState, steering_for_road_angle


@dataclass(frozen=True)
class DriverParams:
    lookahead: float = 10.0
    target_speed: float = 25.0
    speed_gain: float = 0.3  # pedal fraction per m/s of speed error
    # 1 = the lane next to the centerline (the left lane of a right-hand-traffic
    # carriageway), 2 = the next one out.
    lane: int = 1

    def __post_init__(self):
        if not self.lookahead > 0:
            raise ValidationError("driver.lookahead_m must be > 0")
        if not self.target_speed >= 0:
            raise ValidationError("driver.target_speed_mps must be >= 0")
        if not self.speed_gain > 0:
            raise ValidationError("driver.speed_gain must be > 0")
        if self.lane < 1:
            raise ValidationError("driver.lane must be >= 1")


@dataclass(frozen=True)
class DriverScriptState:
    progress: float = 0.0  # unwrapped centerline arclength
    lateral_offset: float = 0.0  # from road centerline, + left
    lane_error: float = 0.0  # from the lane centerline, + left
    crashed: bool = False

    def laps(self, track: Track) -> int:
        return int(self.progress // track.lap_length)


class ScriptedDriver:
    def __init__(self, params: DriverParams, vehicle: VehicleParams, idle: float = 0.05):
        self.params = params
        self.vehicle = vehicle
        self.idle = idle

    def lane_offset(self, track: Track) -> float:
        """Signed offset of the driven lane's centre from the road centerline (right is -)."""
        if self.params.lane > track.lanes // 2:
            raise ValidationError(f"driver.lane {self.params.lane} does not exist on a "
                                  f"{track.lanes}-lane road")
        return -(self.params.lane - 0.5) * track.lane_width

    def initial_state(self, track: Track) -> tuple[VehicleState, DriverScriptState]:
        """Vehicle at rest on the lane centre at the start line."""
        (x, y, z), h, _ = sample_track(track, 0.0)
        off = self.lane_offset(track)
        pos = (x - off * math.sin(h), y + off * math.cos(h), z)
        return VehicleState(position=pos, heading=h), DriverScriptState(0.0, off, 0.0)

    def step(
        self, state: DriverScriptState, vehicle: VehicleState, track: Track, dt: float
    ) -> tuple[DriverInput, DriverScriptState]:
        p, vp = self.params, self.vehicle
        x, y, _ = vehicle.position
        s, offset = track.project(x, y, state.progress)
        lane_off = self.lane_offset(track)
        crashed = state.crashed or abs(offset) > track.half_width
        state = replace(state, progress=s, lateral_offset=offset,
                        lane_error=offset - lane_off, crashed=crashed)

        # pure pursuit toward a point on the lane centre, lookahead metres ahead
        (tx, ty, _), th, _ = sample_track(track, (s + p.lookahead) % track.lap_length)
        tx -= lane_off * math.sin(th)
        ty += lane_off * math.cos(th)
        dx, dy = tx - x, ty - y
        c, sn = math.cos(vehicle.heading), math.sin(vehicle.heading)
        lateral = -dx * sn + dy * c
        dist2 = dx * dx + dy * dy
        curvature = 2.0 * lateral / dist2 if dist2 > 1e-9 else 0.0
        steering = steering_for_road_angle(math.atan(vp.wheelbase * curvature), vp)

        # speed hold: feed-forward for drag and slope, minus the idle creep
        v = vehicle.speed
        _, _, here_grade = sample_track(track, s % track.lap_length)
        resist = vp.drag_coefficient * v * v + GRAVITY * here_grade / math.sqrt(1 + here_grade ** 2)
        u = resist / vp.max_drive_accel - self.idle + p.speed_gain * (p.target_speed - v)
        throttle = min(1.0, max(0.0, u))
        brake = min(1.0, max(0.0, -u * vp.max_drive_accel / vp.max_brake_decel))
        return DriverInput(throttle, brake, steering, Gear.DRIVE), state


class RandomDriver:
    """Seeded Ornstein-Uhlenbeck pedals and steering, with occasional gear changes."""

    def __init__(self, seed: int, steer_scale: float = 300.0, tau: float = 1.5):
        self.rng = np.random.default_rng(seed)
        self.steer_scale = steer_scale
        self.tau = tau
        self._steer = 0.0
        self._pedal = 0.0
        self._gear = Gear.DRIVE

    def step(self, dt: float) -> DriverInput:
        a = math.exp(-dt / self.tau)
        noise = math.sqrt(1 - a * a)
        n1, n2, g = self.rng.standard_normal(3)
        self._steer = a * self._steer + noise * self.steer_scale * n1
        self._pedal = a * self._pedal + noise * 0.8 * n2
        if abs(g) > 3.5:  # a gear change every few hundred frames
            self._gear = Gear(self.rng.choice(["D", "D", "N", "R"]))
        steering = max(-STEERING_LIMIT_DEG, min(STEERING_LIMIT_DEG, self._steer))
        throttle = min(1.0, max(0.0, self._pedal))
        brake = min(1.0, max(0.0, -self._pedal))
        return DriverInput(throttle, brake, steering, self._gear)
