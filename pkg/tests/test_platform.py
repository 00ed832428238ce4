import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cuesim.errors import ValidationError
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

L = PlatformLimits()
DT = 1 / 90
angles = st.floats(-100, 100, allow_nan=False)


def test_default_limits_match_hardware():
    assert L.pitch_range == (-4.4, 6.6)
    assert L.roll_range == (-9.0, 9.0)
    assert L.yaw_range == (-10.0, 10.0)
    assert L.motor_range == (-20.0, 20.0)
    assert L.motor_rate == 80.0


@pytest.mark.parametrize("kwargs", [
    {"pitch_range": (6.6, -4.4)}, {"roll_range": (1.0, 9.0)}, {"motor_rate": 0.0},
    {"motor_range": (-10.0, 20.0)},
])
def test_limits_validation(kwargs):
    with pytest.raises(ValidationError):
        PlatformLimits(**kwargs)


@pytest.mark.parametrize("pose,expected", [
    ((0, 0, 0), (0, 0, 0)),
    ((10, 0, 0), (6.6, 0, 0)),
    ((-10, 0, 12), (-4.4, 0, 10.0)),
    ((0, -20, -30), (0, -9.0, -10.0)),
])
def test_clamp_pose(pose, expected):
    assert clamp_pose(PlatformPose(*pose), L) == PlatformPose(*expected)


@settings(max_examples=100)
@given(angles, angles, angles)
def test_clamp_is_idempotent_projection(p, r, y):
    once = clamp_pose(PlatformPose(p, r, y), L)
    assert clamp_pose(once, L) == once
    assert within_limits(once, L, tol=0.0)


def test_ik_zero():
    assert inverse_kinematics(PlatformPose(), L) == MotorAngles(0, 0, 0)


def test_ik_full_pitch():
    m = inverse_kinematics(PlatformPose(6.6, 0, 0), L)
    assert m.front_left == pytest.approx(20.0) and m.front_right == pytest.approx(20.0)
    assert m.rear == 0.0


def test_ik_joint_saturation_by_hand():
    # s = 6.6/0.33 = 20, d = 9/0.45 = 20, |s|+|d| = 40 -> both halved
    m = inverse_kinematics(PlatformPose(6.6, 9.0, 0), L)
    assert m.front_left == pytest.approx(20.0)
    assert m.front_right == pytest.approx(0.0, abs=1e-12)


def test_fk_examples():
    assert forward_kinematics(MotorAngles(0, 0, 0), L) == PlatformPose(0, 0, 0)
    p = forward_kinematics(MotorAngles(20, 20, 0), L)
    assert (p.pitch, p.roll) == (pytest.approx(6.6), pytest.approx(0.0))
    p = forward_kinematics(MotorAngles(20, -20, 0), L)
    assert (p.pitch, p.roll) == (pytest.approx(0.0), pytest.approx(9.0))
    assert forward_kinematics(MotorAngles(0, 0, 20), L).yaw == pytest.approx(10.0)


def test_round_trip_random_unsaturated_poses():
    rng = np.random.default_rng(11)
    checked = 0
    while checked < 2000:
        p = PlatformPose(rng.uniform(-4.4, 6.6), rng.uniform(-9, 9), rng.uniform(-10, 10))
        if abs(p.pitch / L.k_pitch) + abs(p.roll / L.k_roll) > L.motor_max:
            continue
        back = forward_kinematics(inverse_kinematics(p, L), L)
        assert abs(back.pitch - p.pitch) <= 1e-9
        assert abs(back.roll - p.roll) <= 1e-9
        assert abs(back.yaw - p.yaw) <= 1e-9
        checked += 1


@settings(max_examples=100)
@given(st.floats(-4.4, 6.6).filter(lambda x: abs(x) > 1e-6),
       st.floats(-9, 9).filter(lambda x: abs(x) > 1e-6))
def test_saturation_keeps_roll_pitch_ratio(pitch, roll):
    m = inverse_kinematics(PlatformPose(pitch, roll, 0), L)
    s = (m.front_left + m.front_right) / 2
    d = (m.front_left - m.front_right) / 2
    assert d / s == pytest.approx((roll / L.k_roll) / (pitch / L.k_pitch), rel=1e-9)
    assert max(abs(m.front_left), abs(m.front_right)) <= 20 + 1e-9


def test_rate_limit_examples():
    assert rate_limit_step(MotorAngles(1, 2, 3), MotorAngles(1, 2, 3), DT, L) == MotorAngles(1, 2, 3)
    m = rate_limit_step(MotorAngles(), MotorAngles(20, -20, 20), DT, L)
    assert m.front_left == pytest.approx(80 / 90)
    assert m.front_left == pytest.approx(0.8889, abs=1e-4)
    assert m.front_right == pytest.approx(-80 / 90)
    assert rate_limit_step(MotorAngles(), MotorAngles(0.5, 0, 0), DT, L).front_left == 0.5


def test_rate_limit_random_traces():
    rng = np.random.default_rng(5)
    prev = MotorAngles()
    for _ in range(20_000):
        dt = rng.uniform(1 / 200, 1 / 30)
        target = MotorAngles(*rng.uniform(-20, 20, 3))
        nxt = rate_limit_step(prev, target, dt, L)
        for a, b in zip(prev.as_tuple(), nxt.as_tuple()):
            assert abs(b - a) <= 80 * dt + 1e-12
        prev = nxt


def test_servo_dead_zone_and_clip():
    params = ServoParams(dead_zone=0.5, clip=15.0)
    out, _ = apply_servo_shaping(MotorAngles(0.3, -0.49, 18.0), ServoState(), params, DT)
    assert out == MotorAngles(0.0, 0.0, 15.0)
    out, _ = apply_servo_shaping(MotorAngles(-0.5, -18.0, 2.0), ServoState(), params, DT)
    assert out == MotorAngles(-0.5, -15.0, 2.0)


def test_servo_smoothing_matches_first_order_closed_form():
    tau = 0.1
    alpha = DT / (tau + DT)
    params = ServoParams(dead_zone=0.0, clip=20.0, smoothing_time_constant=tau)
    state = ServoState()
    for k in range(1, 300):
        out, state = apply_servo_shaping(MotorAngles(10, -10, 4), state, params, DT)
        expected = 1 - (1 - alpha) ** k
        assert out.front_left == pytest.approx(10 * expected, abs=1e-12)
        assert out.front_right == pytest.approx(-10 * expected, abs=1e-12)
        assert out.rear == pytest.approx(4 * expected, abs=1e-12)


def test_servo_clip_cannot_exceed_motor_range():
    with pytest.raises(ValidationError):
        ServoParams(clip=25.0).check_against(L)


def test_power_usage_has_no_effect():
    cmd = MotorAngles(3, -4, 5)
    a, _ = apply_servo_shaping(cmd, ServoState(), ServoParams(power_usage=10), DT)
    b, _ = apply_servo_shaping(cmd, ServoState(), ServoParams(power_usage=100), DT)
    assert a == b


@settings(max_examples=30, deadline=None)
@given(st.lists(st.tuples(angles, angles, angles), min_size=1, max_size=200),
       st.floats(0, 2), st.floats(5, 20), st.floats(0, 0.3))
def test_achieved_pose_never_leaves_envelope(requests, dead_zone, clip, smoothing):
    servo = ServoParams(dead_zone, clip, smoothing)
    state, motors = ServoState(), MotorAngles()
    for p, r, y in requests:
        target = inverse_kinematics(clamp_pose(PlatformPose(p, r, y), L), L)
        shaped, state = apply_servo_shaping(target, state, servo, DT)
        nxt = rate_limit_step(motors, shaped, DT, L)
        assert all(abs(b - a) <= 80 * DT + 1e-12 for a, b in zip(motors.as_tuple(), nxt.as_tuple()))
        motors = nxt
        assert within_limits(forward_kinematics(motors, L), L, tol=1e-9)
