import math
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cuesim.errors import ValidationError
from cuesim.scheduler import (
    FrameHooks,
    PipelineMode,
    SchedulerConfig,
    constant_trace,
    explicit_trace,
    fixed_update_steps,
    jittered_trace,
    latency_report,
    mismatch_histogram,
    run_pipeline,
)

P90 = 1 / 90
DEFAULT = PipelineMode.DEFAULT_FIXED_STEP
ON_UPDATE = PipelineMode.PHYSICS_ON_UPDATE


def accumulator_oracle(n_frames, frame_dt, fixed_step):
    """Exact rational replay of the fixed-step loop: per-frame steps and render-state age."""
    acc = Fraction(0)
    steps_total = 0
    out = []
    for k in range(n_frames):
        acc += frame_dt
        n = 0
        while acc >= fixed_step:
            acc -= fixed_step
            n += 1
        steps_total += n
        t = (k + 1) * frame_dt
        out.append((n, t - steps_total * fixed_step))
    return out


class Counter(FrameHooks):
    def __init__(self):
        self.calls = []

    def sample_input(self, time):
        self.calls.append(("input", time))

    def physics_step(self, dt):
        self.calls.append(("physics", dt))


@pytest.mark.parametrize("acc,frame_dt,fixed,steps,left", [
    (0.0, 1 / 90, 0.02, 0, 1 / 90),
    (1 / 90, 1 / 90, 0.02, 1, 2 / 90 - 0.02),
    (0.0, 0.045, 0.02, 2, 0.005),
])
def test_fixed_update_steps(acc, frame_dt, fixed, steps, left):
    n, rest = fixed_update_steps(acc, frame_dt, fixed)
    assert n == steps
    assert rest == pytest.approx(left, abs=1e-12)


def test_fixed_update_examples_in_ms():
    n, rest = fixed_update_steps(0.01111, 0.01111, 0.02)
    assert n == 1 and rest == pytest.approx(0.00222, abs=1e-9)


def test_fixed_update_rejects_bad_dt():
    with pytest.raises(ValidationError):
        fixed_update_steps(0.0, 0.0, 0.02)


@settings(max_examples=50)
@given(st.lists(st.floats(1e-4, 0.1), min_size=1, max_size=300), st.floats(1e-3, 0.05))
def test_accumulator_conservation(frame_dts, fixed):
    acc, steps = 0.0, 0
    for dt in frame_dts:
        n, acc = fixed_update_steps(acc, dt, fixed)
        assert n >= 0 and acc >= 0
        steps += n
    assert steps * fixed == pytest.approx(sum(frame_dts) - acc, abs=1e-9)


def test_default_pipeline_matches_exact_oracle():
    frames = 90
    oracle = accumulator_oracle(frames, Fraction(1, 90), Fraction(1, 50))
    recs = run_pipeline(SchedulerConfig(mode=DEFAULT), constant_trace(P90), until=frames * P90 + 1e-9)
    assert len(recs) == frames
    for rec, (n, age) in zip(recs, oracle):
        assert rec.physics_steps == n
        assert rec.input_sample_time - rec.physics_state_time_for_render == pytest.approx(float(age), abs=1e-9)
    assert [n for n, _ in oracle[:10]] == [0, 1, 0, 1, 0, 1, 0, 1, 1, 0]
    ages_ms = [float(a) * 1e3 for _, a in oracle[:10]]
    assert min(ages_ms) == pytest.approx(0.0, abs=1e-9)
    assert max(ages_ms) == pytest.approx(17.7778, abs=1e-3)


def test_default_pipeline_step_count_conservation():
    recs = run_pipeline(SchedulerConfig(mode=DEFAULT), jittered_trace(0.012, 0.004, 3), until=20.0)
    steps = sum(r.physics_steps for r in recs)
    wall = recs[-1].input_sample_time
    leftover = wall - steps * 0.02
    assert 0 <= leftover < 0.02
    assert recs[-1].physics_state_time_for_render == pytest.approx(steps * 0.02)


def test_physics_on_update_provenance_and_latency():
    recs = run_pipeline(SchedulerConfig(), constant_trace(0.008), until=10.0)
    assert all(r.physics_state_time_for_render == r.physics_state_time_for_platform for r in recs)
    assert all(r.physics_steps == 1 for r in recs)
    assert all(r.input_latency == pytest.approx(P90, abs=1e-9) for r in recs)
    rep = latency_report(recs)
    assert 11.0 <= rep.mean_input_latency_ms <= 11.2
    assert rep.mean_mismatch_ms == 0.0 and rep.dropped_frames == 0


def test_physics_on_update_hook_order():
    hooks = Counter()
    run_pipeline(SchedulerConfig(), explicit_trace([0.005] * 3), hooks)
    kinds = [c[0] for c in hooks.calls]
    assert kinds == ["input", "physics"] * 3
    assert [c[1] for c in hooks.calls if c[0] == "physics"] == pytest.approx([P90] * 3)


def test_default_mode_runs_physics_before_input():
    hooks = Counter()
    run_pipeline(SchedulerConfig(mode=DEFAULT), explicit_trace([0.005] * 4), hooks)
    kinds = [c[0] for c in hooks.calls]
    assert kinds == ["input", "physics", "input", "input", "physics", "input"]


def test_140hz_latency():
    recs = run_pipeline(SchedulerConfig(display_hz=140), constant_trace(0.005), until=5.0)
    assert latency_report(recs).mean_input_latency_ms == pytest.approx(1000 / 140, abs=0.1)


@pytest.mark.parametrize("buffers", [1, 2, 3])
def test_latency_scales_with_frame_buffers(buffers):
    recs = run_pipeline(SchedulerConfig(frame_buffers=buffers), constant_trace(0.005), until=2.0)
    assert latency_report(recs).mean_input_latency_ms == pytest.approx(buffers * 1000 / 90, abs=1e-6)


def test_zero_buffers_presents_on_completion():
    recs = run_pipeline(SchedulerConfig(frame_buffers=0), constant_trace(0.004), until=1.0)
    assert all(r.input_latency == pytest.approx(0.004) for r in recs)


def test_overrun_drops_a_frame():
    recs = run_pipeline(SchedulerConfig(), explicit_trace([0.005, 0.015, 0.005]))
    assert [r.dropped for r in recs] == [False, True, False]
    assert recs[1].present_time - recs[1].input_sample_time == pytest.approx(2 * P90)
    assert recs[2].input_sample_time - recs[1].input_sample_time == pytest.approx(2 * P90)
    assert latency_report(recs).dropped_frames == 1


def test_without_vsync_frames_run_back_to_back():
    recs = run_pipeline(SchedulerConfig(vsync=False), explicit_trace([0.004, 0.006, 0.005]))
    starts = [r.input_sample_time for r in recs]
    assert starts[1] - starts[0] == pytest.approx(0.004)
    assert starts[2] - starts[1] == pytest.approx(0.006)
    assert not any(r.dropped for r in recs)


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(1e-3, 0.05), min_size=2, max_size=200),
       st.sampled_from(list(PipelineMode)), st.integers(0, 3), st.booleans())
def test_present_time_strictly_increasing(trace, mode, buffers, vsync):
    cfg = SchedulerConfig(mode=mode, frame_buffers=buffers, vsync=vsync)
    recs = run_pipeline(cfg, explicit_trace(trace))
    presents = [r.present_time for r in recs]
    assert all(b > a for a, b in zip(presents, presents[1:]))


def test_phase_locked_fixed_step_has_no_mismatch():
    recs = run_pipeline(SchedulerConfig(mode=DEFAULT, fixed_step=P90), constant_trace(P90), until=60.0)
    rep = latency_report(recs)
    assert rep.mismatch_nonzero_fraction == 0.0
    assert rep.max_mismatch_ms < 1e-6


def test_determinism():
    cfg = SchedulerConfig(mode=DEFAULT)
    a = run_pipeline(cfg, jittered_trace(0.01, 0.003, 42), until=30.0)
    b = run_pipeline(cfg, jittered_trace(0.01, 0.003, 42), until=30.0)
    assert a == b


def test_until_and_stop_from_hook():
    assert run_pipeline(SchedulerConfig(), constant_trace(0.005), until=0.0) == []

    class StopAfterThree(FrameHooks):
        def update(self, record):
            return record.frame_index < 2

    assert len(run_pipeline(SchedulerConfig(), constant_trace(0.005), StopAfterThree())) == 3


def test_histogram_counts_every_frame():
    recs = run_pipeline(SchedulerConfig(mode=DEFAULT), constant_trace(P90), until=1.0)
    hist = mismatch_histogram(recs)
    assert sum(hist["counts"]) == len(recs)
    assert hist["bin_edges_ms"][0] == 0.0 and hist["bin_edges_ms"][-1] >= 17.7


def test_report_needs_records():
    with pytest.raises(ValidationError):
        latency_report([])


@pytest.mark.parametrize("kwargs", [{"display_hz": 0}, {"fixed_step": -1}, {"frame_buffers": -1},
                                    {"mode": "sometimes"}])
def test_config_validation(kwargs):
    with pytest.raises((ValidationError, ValueError)):
        SchedulerConfig(**kwargs)


def test_bad_trace_entries():
    with pytest.raises(ValidationError):
        list(explicit_trace([0.01, 0.0]))
    with pytest.raises(ValidationError):
        next(constant_trace(0.0))
