"""End-to-end runs: config -> frame pipeline -> telemetry CSV + metrics JSON."""

from __future__ import annotations

import csv
import hashlib
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import TextIO

from cuesim.conditioning import (
    ConditionedCommand,
    ConditioningParams,
    DriverInput,
    PedalFilterState,
    condition_pedals,
)
from cuesim.config import RunConfig, with_overrides
from cuesim.cueing import CueGains, CueTarget, WashoutParams, YawWashoutState, compose_cue_frame
from cuesim.driver import DriverParams, RandomDriver, ScriptedDriver
from cuesim.errors import InvariantViolation, ValidationError
from cuesim.platform import (
    MotorAngles,
    PlatformLimits,
    PlatformPose,
    ServoParams,
    ServoState,
    apply_servo_shaping,
    clamp_pose,
    forward_kinematics,
    inverse_kinematics,
    rate_limit_step,
    within_limits,
)
from cuesim.scheduler import (
    FrameHooks,
    FrameRecord,
    PipelineMode,
    SchedulerConfig,
    constant_trace,
    explicit_trace,
    jittered_trace,
    latency_report,
    mismatch_histogram,
    run_pipeline,
)
from cuesim.track import Track, TurnSpec, build_track, export_geometry
from cuesim.vehicle import (
    HapticCalibration,
    VehicleParams,
    VehicleState,
    accel_by_differencing,
    centripetal_accel,
    extrapolate_state,
    haptic_cue,
    step_vehicle,
)

TELEMETRY_SCHEMA_VERSION = 1
TELEMETRY_COLUMNS = (
    "frame_index", "sim_time_s", "throttle_raw", "throttle_filtered", "brake_filtered",
    "steering_deg", "gear", "speed_mps", "accel_long", "accel_lat", "centripetal", "yaw_rate",
    "cue_pitch_deg", "cue_roll_deg", "cue_yaw_deg", "pose_pitch_deg", "pose_roll_deg",
    "pose_yaw_deg", "motor_fl_deg", "motor_fr_deg", "motor_rear_deg", "input_latency_ms",
    "provenance_mismatch_ms", "crash_flag",
)
# slack for float rounding when checking the envelope and motor steps
ENVELOPE_TOL = 1e-9


@dataclass(frozen=True)
class Rig:
    """All validated module parameters for one run."""

    conditioning: ConditioningParams
    vehicle: VehicleParams
    haptics: HapticCalibration
    gains: CueGains
    washout: WashoutParams
    limits: PlatformLimits
    servo: ServoParams
    scheduler: SchedulerConfig
    track: Track
    driver: DriverParams
    driver_kind: str


def build_rig(cfg: RunConfig) -> Rig:
    sch = cfg.scheduler
    scheduler = SchedulerConfig(sch.display_hz, sch.fixed_step_s, PipelineMode(sch.mode),
                                sch.frame_buffers, sch.vsync)
    inp = cfg.input
    conditioning = ConditioningParams.from_time_constants(
        inp.time_constant_s, scheduler.period, inp.idle_drive, inp.brake_time_constant_s)
    v = cfg.vehicle
    vehicle = VehicleParams(v.wheelbase_m, v.max_drive_accel, v.max_brake_decel,
                            v.drag_coefficient, v.max_steer_road_angle_deg,
                            v.reverse_speed_cap_mps)
    haptics = HapticCalibration(v.haptic_freq_per_mps, v.haptic_mag_per_mps, v.haptic_freq_cap_hz)
    c = cfg.cueing
    gains = CueGains(c.pitch_gain, c.roll_gain, c.roll_source)
    washout = WashoutParams(c.hp_time_constant_s, c.subthreshold_deg_s, c.yaw_gain)
    p = cfg.platform
    limits = PlatformLimits((p.pitch_min_deg, p.pitch_max_deg), (p.roll_min_deg, p.roll_max_deg),
                            (p.yaw_min_deg, p.yaw_max_deg),
                            (-p.motor_range_deg, p.motor_range_deg), p.motor_rate_deg_s)
    servo = ServoParams(p.dead_zone_deg, p.clip_deg, p.smoothing_time_constant_s, p.power_usage)
    servo.check_against(limits)
    t = cfg.track
    turn_kwargs = {}
    if t.turns is not None:
        turn_kwargs["turns"] = [TurnSpec(e.sweep, e.slope, e.direction) for e in t.turns]
    track = build_track(t.straight_length_m, t.grade, t.lane_width_m,
                        transition_length=t.transition_length_m, lanes=t.lanes, **turn_kwargs)
    d = cfg.driver
    driver = DriverParams(d.lookahead_m, d.target_speed_mps, d.speed_gain, d.lane)
    if d.lane > t.lanes // 2:
        raise ValidationError(f"driver.lane: lane {d.lane} does not exist on a {t.lanes}-lane road")
    if sch.frame_times_ms is not None and (sch.frame_time_ms is not None or sch.jitter_ms):
        raise ValidationError("scheduler.frame_times_ms excludes frame_time_ms and jitter_ms")
    return Rig(conditioning, vehicle, haptics, gains, washout, limits, servo, scheduler,
               track, driver, d.kind)


def make_trace(cfg: RunConfig, scheduler: SchedulerConfig):
    sch = cfg.scheduler
    if sch.frame_times_ms is not None:
        return explicit_trace([x / 1e3 for x in sch.frame_times_ms])
    base = sch.frame_time_ms / 1e3 if sch.frame_time_ms is not None else 0.8 * scheduler.period
    if sch.jitter_ms > 0:
        return jittered_trace(base, sch.jitter_ms / 1e3, cfg.run.seed)
    return constant_trace(base)


def _fmt(x) -> str:
    if isinstance(x, float):
        return format(x, ".10g")
    return str(x)


class RigSimulation(FrameHooks):
    """Wires driver, conditioning, vehicle, cueing and platform into the frame loop."""

    def __init__(self, rig: Rig, seed: int, sink: TextIO | None = None):
        self.rig = rig
        self.period = rig.scheduler.period
        if rig.driver_kind == "scripted":
            self.driver = ScriptedDriver(rig.driver, rig.vehicle, rig.conditioning.idle)
            self.vehicle, self.driver_state = self.driver.initial_state(rig.track)
        else:
            self.driver = RandomDriver(seed)
            self.vehicle, self.driver_state = VehicleState(), None

        self.raw = DriverInput()
        self.cmd = ConditionedCommand()
        self.throttle_state = PedalFilterState()
        self.brake_state = PedalFilterState()
        self.washout_state = YawWashoutState()
        self.servo_state = ServoState()
        self.motors = MotorAngles()
        self.prev_platform_velocity = self.vehicle.velocity
        self.grade = 0.0

        self.writer = csv.writer(sink, lineterminator="\n") if sink is not None else None
        if self.writer:
            self.writer.writerow(TELEMETRY_COLUMNS)

        self.frames = 0
        self.pose_min = [math.inf] * 3
        self.pose_max = [-math.inf] * 3
        self.rate_saturations = 0
        self.crash_events: list[dict] = []
        self.max_lane_error_on_arcs = 0.0
        self.max_haptic_frequency = 0.0

    def sample_input(self, time: float) -> None:
        if self.driver_state is not None:
            self.raw, self.driver_state = self.driver.step(
                self.driver_state, self.vehicle, self.rig.track, self.period)
            seg, u = self.rig.track.segment_at(self.driver_state.progress)
            self.grade = seg.point(u)[2]
            if seg.kind == "arc":
                self.max_lane_error_on_arcs = max(self.max_lane_error_on_arcs,
                                                  abs(self.driver_state.lane_error))
        else:
            self.raw = self.driver.step(self.period)
        self.cmd, self.throttle_state, self.brake_state = condition_pedals(
            self.raw, self.throttle_state, self.brake_state, self.rig.conditioning)

    def physics_step(self, dt: float) -> None:
        self.vehicle = step_vehicle(self.vehicle, self.cmd, self.raw.steering, self.rig.vehicle,
                                    dt, self.raw.gear, self.grade)

    def update(self, record: FrameRecord) -> bool:
        rig = self.rig
        dt = record.frame_dt
        # the platform sees the vehicle at its own provenance time
        state = extrapolate_state(
            self.vehicle, record.physics_state_time_for_platform - record.physics_state_time_for_render)
        accel = accel_by_differencing(self.prev_platform_velocity, state.velocity, state.heading, dt)
        self.prev_platform_velocity = state.velocity
        cue, self.washout_state = compose_cue_frame(
            accel, state.speed, state.yaw_rate, self.washout_state, rig.gains, rig.washout, dt)

        target = inverse_kinematics(clamp_pose(PlatformPose(cue.pitch, cue.roll, cue.yaw), rig.limits),
                                    rig.limits)
        shaped, self.servo_state = apply_servo_shaping(target, self.servo_state, rig.servo, dt)
        prev = self.motors
        self.motors = rate_limit_step(prev, shaped, dt, rig.limits)
        self._check_motors(prev, shaped, dt, record.frame_index)
        pose = forward_kinematics(self.motors, rig.limits)
        if not within_limits(pose, rig.limits, ENVELOPE_TOL):
            raise InvariantViolation(f"frame {record.frame_index}: achieved pose {pose} outside limits")
        for i, v in enumerate((pose.pitch, pose.roll, pose.yaw)):
            self.pose_min[i] = min(self.pose_min[i], v)
            self.pose_max[i] = max(self.pose_max[i], v)
        self.max_haptic_frequency = max(self.max_haptic_frequency,
                                        haptic_cue(state.speed, rig.haptics).frequency)

        crashed = self.driver_state is not None and self.driver_state.crashed
        if crashed:
            self.crash_events.append({"frame_index": record.frame_index,
                                      "time_s": record.input_sample_time,
                                      "progress_m": self.driver_state.progress})
        self.frames += 1
        if self.writer:
            self._write_row(record, accel, state, cue, pose, crashed)
        return not crashed

    def _check_motors(self, prev: MotorAngles, shaped: MotorAngles, dt: float, frame: int) -> None:
        step = self.rig.limits.motor_rate * dt
        saturated = False
        for p, s, m in zip(prev.as_tuple(), shaped.as_tuple(), self.motors.as_tuple()):
            if abs(m - p) > step + ENVELOPE_TOL:
                raise InvariantViolation(f"frame {frame}: motor moved {abs(m - p):.6f} deg > {step:.6f}")
            if abs(m) > self.rig.limits.motor_max + ENVELOPE_TOL:
                raise InvariantViolation(f"frame {frame}: motor angle {m:.6f} outside range")
            saturated = saturated or abs(s - p) > step
        self.rate_saturations += saturated

    def _write_row(self, rec: FrameRecord, accel, state: VehicleState, cue: CueTarget,
                   pose: PlatformPose, crashed: bool) -> None:
        m = self.motors
        row = (
            rec.frame_index, rec.input_sample_time, self.raw.throttle,
            self.throttle_state.last_output, self.brake_state.last_output, self.raw.steering,
            self.raw.gear.value, state.speed, accel.longitudinal, accel.lateral,
            centripetal_accel(state.speed, state.yaw_rate), state.yaw_rate,
            cue.pitch, cue.roll, cue.yaw, pose.pitch, pose.roll, pose.yaw,
            m.front_left, m.front_right, m.rear, rec.input_latency * 1e3, rec.mismatch * 1e3,
            int(crashed),
        )
        self.writer.writerow([_fmt(x) for x in row])

    def metrics(self, records: list[FrameRecord]) -> dict:
        out = {
            "frames": self.frames,
            "latency": latency_report(records).to_dict() if records else None,
            "max_abs_pose_deg": None,
            "pose_range_deg": None,
            "motor_rate_saturation_count": self.rate_saturations,
            "crash_events": self.crash_events,
            "laps_completed": (self.driver_state.laps(self.rig.track)
                               if self.driver_state is not None else 0),
            "max_lane_error_on_arcs_m": self.max_lane_error_on_arcs,
            "max_haptic_frequency_hz": self.max_haptic_frequency,
        }
        if self.frames:
            axes = ("pitch", "roll", "yaw")
            out["max_abs_pose_deg"] = {
                a: float(max(abs(lo), abs(hi))) for a, lo, hi in zip(axes, self.pose_min, self.pose_max)}
            out["pose_range_deg"] = {
                a: [float(lo), float(hi)] for a, lo, hi in zip(axes, self.pose_min, self.pose_max)}
        return out


@dataclass
class ScenarioResult:
    records: list[FrameRecord]
    metrics: dict
    telemetry: str

    @property
    def telemetry_digest(self) -> str:
        return hashlib.sha256(self.telemetry.encode("utf-8")).hexdigest()


def simulate(cfg: RunConfig, keep_telemetry: bool = True) -> ScenarioResult:
    """Run one scenario in memory. Raises on invalid config or a broken invariant."""
    rig = build_rig(cfg)
    sink = io.StringIO() if keep_telemetry else None
    sim = RigSimulation(rig, cfg.run.seed, sink)
    records = run_pipeline(rig.scheduler, make_trace(cfg, rig.scheduler), sim, until=cfg.run.duration_s)
    metrics = sim.metrics(records)
    metrics.update({
        "seed": cfg.run.seed,
        "duration_s": cfg.run.duration_s,
        "mode": rig.scheduler.mode.value,
        "display_hz": rig.scheduler.display_hz,
        "telemetry_schema": {"version": TELEMETRY_SCHEMA_VERSION, "columns": list(TELEMETRY_COLUMNS)},
    })
    return ScenarioResult(records, metrics, sink.getvalue() if sink else "")


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def run_scenario(cfg: RunConfig, out_dir: str | Path | None = None) -> tuple[Path, Path]:
    out = Path(out_dir if out_dir is not None else cfg.run.output_dir)
    result = simulate(cfg)
    out.mkdir(parents=True, exist_ok=True)
    telemetry = out / "telemetry.csv"
    telemetry.write_text(result.telemetry, encoding="utf-8")
    result.metrics["telemetry_sha256"] = result.telemetry_digest
    metrics = out / "metrics.json"
    _write_json(metrics, result.metrics)
    return telemetry, metrics


def compare_pipelines(cfg: RunConfig, out_dir: str | Path | None = None) -> tuple[Path, dict]:
    """Same scenario under both pipelines; latency reports and mismatch histograms side by side."""
    out = Path(out_dir if out_dir is not None else cfg.run.output_dir)
    report = {}
    for mode in PipelineMode:
        result = simulate(with_overrides(cfg, {"scheduler.mode": mode.value}), keep_telemetry=False)
        report[mode.value] = {
            "latency": result.metrics["latency"],
            "mismatch_histogram": mismatch_histogram(result.records) if result.records else None,
            "frames": result.metrics["frames"],
            "crash_events": result.metrics["crash_events"],
        }
    out.mkdir(parents=True, exist_ok=True)
    path = out / "comparison.json"
    _write_json(path, report)
    return path, report


def export_track(cfg: RunConfig, out_dir: str | Path | None = None) -> Path:
    rig_track = build_rig(cfg).track
    out = Path(out_dir if out_dir is not None else cfg.run.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    path = out / "track.json"
    _write_json(path, export_geometry(rig_track))
    return path
