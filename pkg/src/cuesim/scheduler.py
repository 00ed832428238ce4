"""Discrete-event emulation of the two frame pipelines.

``DEFAULT_FIXED_STEP`` is the stock game-engine loop: each frame first runs as
many fixed physics steps as the accumulated frame time pays for (possibly
none), then the per-frame update samples input, drives the platform and
renders. The picture shows the last completed physics state, while the
platform command is evaluated at the frame's own timestamp, so the two
senses see states that differ by whatever is left in the accumulator.

``PHYSICS_ON_UPDATE`` moves a single physics step to the start of every
frame, with the step size equal to the elapsed frame time. Display and
platform then consume the same state; with VSync and one queued frame the
picture appears one display period after the input was sampled.

Timeline conventions: the wall clock starts at 0 and the first frame begins
one display period later, so every frame, the first included, has a
positive elapsed time. Nothing here sleeps; all times are simulated.
"""

from __future__ import annotations

import enum
import math
from collections.abc import Iterable, Iterator, Sequence
from dataclasses import asdict, dataclass

import numpy as np

from cuesim.errors import ValidationError

# below this, two provenance times are the same state (float noise only)
MISMATCH_EPS_MS = 1e-6
_TICK_EPS = 1e-9


class PipelineMode(str, enum.Enum):
    DEFAULT_FIXED_STEP = "default_fixed_step"
    PHYSICS_ON_UPDATE = "physics_on_update"


@dataclass(frozen=True)
class SchedulerConfig:
    display_hz: float = 90.0
    fixed_step: float = 0.02
    mode: PipelineMode = PipelineMode.PHYSICS_ON_UPDATE
    frame_buffers: int = 1
    vsync: bool = True

    def __post_init__(self):
        if not (math.isfinite(self.display_hz) and self.display_hz > 0):
            raise ValidationError(f"scheduler.display_hz must be > 0, got {self.display_hz}")
        if not (math.isfinite(self.fixed_step) and self.fixed_step > 0):
            raise ValidationError(f"scheduler.fixed_step_s must be > 0, got {self.fixed_step}")
        if self.frame_buffers < 0:
            raise ValidationError("scheduler.frame_buffers must be >= 0")
        object.__setattr__(self, "mode", PipelineMode(self.mode))

    @property
    def period(self) -> float:
        return 1.0 / self.display_hz


@dataclass(frozen=True)
class FrameRecord:
    frame_index: int
    input_sample_time: float
    physics_state_time_for_render: float
    physics_state_time_for_platform: float
    present_time: float
    frame_dt: float
    physics_steps: int
    dropped: bool = False

    @property
    def input_latency(self) -> float:
        return self.present_time - self.input_sample_time

    @property
    def mismatch(self) -> float:
        return abs(self.physics_state_time_for_render - self.physics_state_time_for_platform)


class FrameHooks:
    """Callbacks the pipeline drives; the default implementation does nothing.

    Order within a frame depends on the mode. Physics-on-update calls
    ``sample_input``, ``physics_step`` then ``update``; the fixed-step loop
    calls ``physics_step`` zero or more times before ``sample_input`` and
    ``update``.
    """

    def sample_input(self, time: float) -> None:
        pass

    def physics_step(self, dt: float) -> None:
        pass

    def update(self, record: FrameRecord) -> bool:
        """Consume a finished frame. Return False to stop the run."""
        return True


def fixed_update_steps(accumulator: float, frame_dt: float, fixed_step: float) -> tuple[int, float]:
    """Number of fixed physics steps owed this frame, and the leftover time."""
    if not frame_dt > 0:
        raise ValidationError(f"frame_dt must be > 0, got {frame_dt}")
    total = accumulator + frame_dt
    n = math.floor(total / fixed_step + _TICK_EPS)
    return n, max(0.0, total - n * fixed_step)


def constant_trace(compute_time: float) -> Iterator[float]:
    if not compute_time > 0:
        raise ValidationError("frame compute time must be > 0")
    while True:
        yield compute_time


def jittered_trace(compute_time: float, jitter: float, seed: int, chunk: int = 4096) -> Iterator[float]:
    """Gaussian jitter around ``compute_time``, floored at 1% of it."""
    if not compute_time > 0 or jitter < 0:
        raise ValidationError("frame compute time must be > 0 and jitter >= 0")
    rng = np.random.default_rng(seed)
    floor = 0.01 * compute_time
    while True:
        for x in rng.normal(compute_time, jitter, chunk):
            yield max(floor, float(x))


def explicit_trace(values: Sequence[float]) -> Iterator[float]:
    if any(not (v > 0 and math.isfinite(v)) for v in values):
        raise ValidationError("frame compute times must all be > 0")
    yield from values


def run_pipeline(
    cfg: SchedulerConfig,
    trace: Iterable[float],
    hooks: FrameHooks | None = None,
    until: float | None = None,
) -> list[FrameRecord]:
    """Run frames until ``trace`` runs out or a frame would start after ``until``."""
    hooks = hooks or FrameHooks()
    period = cfg.period
    records: list[FrameRecord] = []

    ticks = 1  # display periods elapsed at frame start (vsync timeline)
    start = period
    prev_start = 0.0
    accumulator = 0.0
    fixed_steps_total = 0

    for k, compute in enumerate(trace):
        if not compute > 0:
            raise ValidationError(f"frame {k}: compute time must be > 0, got {compute}")
        if until is not None and start > until + _TICK_EPS:
            break
        frame_dt = start - prev_start
        periods_needed = max(1, math.ceil(compute / period - _TICK_EPS))

        if cfg.mode is PipelineMode.PHYSICS_ON_UPDATE:
            hooks.sample_input(start)
            hooks.physics_step(frame_dt)
            render_time = platform_time = start
            n_steps = 1
        else:
            n_steps, accumulator = fixed_update_steps(accumulator, frame_dt, cfg.fixed_step)
            for _ in range(n_steps):
                hooks.physics_step(cfg.fixed_step)
            fixed_steps_total += n_steps
            hooks.sample_input(start)
            render_time = fixed_steps_total * cfg.fixed_step
            platform_time = start

        if cfg.vsync and cfg.frame_buffers > 0:
            present = start + max(cfg.frame_buffers, periods_needed) * period
        else:
            present = start + compute
        dropped = cfg.vsync and periods_needed > 1

        rec = FrameRecord(
            frame_index=k,
            input_sample_time=start,
            physics_state_time_for_render=render_time,
            physics_state_time_for_platform=platform_time,
            present_time=present,
            frame_dt=frame_dt,
            physics_steps=n_steps,
            dropped=dropped,
        )
        records.append(rec)
        if not hooks.update(rec):
            break

        prev_start = start
        if cfg.vsync:
            ticks += periods_needed
            start = ticks * period
        else:
            start = start + compute
    return records


@dataclass(frozen=True)
class LatencyReport:
    frames: int
    mean_input_latency_ms: float
    max_input_latency_ms: float
    min_input_latency_ms: float
    mean_mismatch_ms: float
    max_mismatch_ms: float
    mismatch_nonzero_fraction: float
    mean_state_age_ms: float
    max_state_age_ms: float
    dropped_frames: int

    def to_dict(self) -> dict:
        return asdict(self)


def mismatch_ms(records: Sequence[FrameRecord]) -> np.ndarray:
    return np.array([r.mismatch * 1e3 for r in records])


def latency_report(records: Sequence[FrameRecord]) -> LatencyReport:
    if not records:
        raise ValidationError("latency_report needs at least one frame")
    latency = np.array([r.input_latency for r in records]) * 1e3
    mismatch = mismatch_ms(records)
    age = np.array([r.present_time - r.physics_state_time_for_render for r in records]) * 1e3
    return LatencyReport(
        frames=len(records),
        mean_input_latency_ms=float(latency.mean()),
        max_input_latency_ms=float(latency.max()),
        min_input_latency_ms=float(latency.min()),
        mean_mismatch_ms=float(mismatch.mean()),
        max_mismatch_ms=float(mismatch.max()),
        mismatch_nonzero_fraction=float(np.mean(mismatch > MISMATCH_EPS_MS)),
        mean_state_age_ms=float(age.mean()),
        max_state_age_ms=float(age.max()),
        dropped_frames=sum(r.dropped for r in records),
    )


def mismatch_histogram(records: Sequence[FrameRecord], bin_ms: float = 1.0) -> dict:
    """Counts of per-frame mismatch in ``bin_ms`` wide bins starting at 0."""
    m = mismatch_ms(records)
    top = max(bin_ms, math.ceil((float(m.max()) if m.size else 0.0) / bin_ms + _TICK_EPS) * bin_ms)
    edges = np.arange(0.0, top + bin_ms / 2, bin_ms)
    if edges.size < 2:
        edges = np.array([0.0, bin_ms])
    counts, edges = np.histogram(m, bins=edges)
    return {"bin_edges_ms": [float(e) for e in edges], "counts": [int(c) for c in counts]}
