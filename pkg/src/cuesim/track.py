"""The nine-turn highway loop used as the driving stimulus.

Every combination of turn sweep {30, 60, 90} deg and slope {incline, decline,
plateau} appears exactly once as a 100 m radius arc. Arcs are joined by
straights, and the loop is closed by lengthening or shortening two of those
straights, which is the only freedom used, so the arc set is never touched.

Lengths are horizontal arclength. Arcs carry a constant grade; straights
blend from the previous arc's grade down to level and back up to the next
arc's grade over ``transition_length`` at each end. The elevation a straight
contributes therefore does not depend on its length, and because inclines
and declines of each sweep cancel, the loop closes in height as well.
"""

from __future__ import annotations

import bisect
import enum
import math
from collections.abc import Sequence
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations

from cuesim.errors import ValidationError
from cuesim.vehicle import normalize_angle

STIMULUS_RADIUS = 100.0
SWEEPS = (30, 60, 90)


class Slope(str, enum.Enum):
    INCLINE = "incline"
    DECLINE = "decline"
    PLATEAU = "plateau"


class Turn(str, enum.Enum):
    LEFT = "left"
    RIGHT = "right"


@dataclass(frozen=True)
class TurnSpec:
    sweep: int
    slope: Slope
    direction: Turn

    def __post_init__(self):
        object.__setattr__(self, "slope", Slope(self.slope))
        object.__setattr__(self, "direction", Turn(self.direction))
        if self.sweep not in SWEEPS:
            raise ValidationError(f"turn sweep must be one of {SWEEPS}, got {self.sweep}")


# Seven lefts and two rights: net +360 deg, a simple counter-clockwise loop.
DEFAULT_TURNS = (
    TurnSpec(90, Slope.PLATEAU, Turn.LEFT),
    TurnSpec(30, Slope.INCLINE, Turn.RIGHT),
    TurnSpec(60, Slope.INCLINE, Turn.LEFT),
    TurnSpec(90, Slope.DECLINE, Turn.LEFT),
    TurnSpec(30, Slope.PLATEAU, Turn.LEFT),
    TurnSpec(60, Slope.DECLINE, Turn.RIGHT),
    TurnSpec(90, Slope.INCLINE, Turn.LEFT),
    TurnSpec(30, Slope.DECLINE, Turn.LEFT),
    TurnSpec(60, Slope.PLATEAU, Turn.LEFT),
)


@dataclass(frozen=True)
class TrackSegment:
    kind: str  # "straight" | "arc"
    s_start: float
    length: float
    x0: float
    y0: float
    z0: float
    heading0: float
    radius: float = 0.0
    sweep: int = 0
    direction: int = 0  # +1 left, -1 right, 0 for straights
    slope: Slope | None = None
    grade: float = 0.0  # arcs: constant grade
    grade_in: float = 0.0  # straights: grade at entry and exit
    grade_out: float = 0.0
    transition: float = 0.0

    @property
    def s_end(self) -> float:
        return self.s_start + self.length

    def _elevation_grade(self, u: float) -> tuple[float, float]:
        if self.kind == "arc":
            return self.z0 + self.grade * u, self.grade
        T, L = self.transition, self.length
        g0, g1 = self.grade_in, self.grade_out
        if u <= T:
            return self.z0 + g0 * (u - u * u / (2 * T)), g0 * (1 - u / T)
        z_mid = self.z0 + g0 * T / 2
        if u < L - T:
            return z_mid, 0.0
        w = u - (L - T)
        return z_mid + g1 * w * w / (2 * T), g1 * w / T

    def point(self, u: float) -> tuple[tuple[float, float, float], float, float]:
        """Position, heading and grade at distance ``u`` into the segment."""
        z, grade = self._elevation_grade(u)
        h0 = self.heading0
        if self.kind == "straight":
            return (self.x0 + u * math.cos(h0), self.y0 + u * math.sin(h0), z), h0, grade
        d, r = self.direction, self.radius
        cx, cy = self.x0 - d * r * math.sin(h0), self.y0 + d * r * math.cos(h0)
        h = h0 + d * u / r
        return (cx + d * r * math.sin(h), cy - d * r * math.cos(h), z), normalize_angle(h), grade

    def closest(self, x: float, y: float) -> tuple[float, float, float]:
        """``(u, lateral_offset, distance)`` of the nearest point; offset is + to the left."""
        h0 = self.heading0
        if self.kind == "straight":
            c, s = math.cos(h0), math.sin(h0)
            dx, dy = x - self.x0, y - self.y0
            along = dx * c + dy * s
            offset = -dx * s + dy * c
            u = min(max(along, 0.0), self.length)
            dist = math.hypot(along - u, offset)
            return u, offset, dist
        d, r = self.direction, self.radius
        cx, cy = self.x0 - d * r * math.sin(h0), self.y0 + d * r * math.cos(h0)
        rho = math.hypot(x - cx, y - cy)
        a0 = math.atan2(self.y0 - cy, self.x0 - cx)
        a = math.atan2(y - cy, x - cx)
        u = d * r * math.remainder(a - a0, math.tau)
        offset = d * (r - rho)
        if 0.0 <= u <= self.length:
            return u, offset, abs(offset)
        u = min(max(u, 0.0), self.length)
        (px, py, _), _, _ = self.point(u)
        return u, offset, math.hypot(x - px, y - py)


@dataclass(frozen=True)
class Track:
    segments: tuple[TrackSegment, ...]
    lane_width: float = 3.5
    lanes: int = 4
    _starts: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        object.__setattr__(self, "_starts", tuple(s.s_start for s in self.segments))

    @cached_property
    def lap_length(self) -> float:
        return self.segments[-1].s_end

    @property
    def arcs(self) -> list[TrackSegment]:
        return [s for s in self.segments if s.kind == "arc"]

    @property
    def half_width(self) -> float:
        return self.lanes * self.lane_width / 2

    def segment_at(self, s: float) -> tuple[TrackSegment, float]:
        s = s % self.lap_length
        i = bisect.bisect_right(self._starts, s) - 1
        seg = self.segments[i]
        return seg, min(s - seg.s_start, seg.length)

    def project(self, x: float, y: float, s_hint: float, window: float = 60.0) -> tuple[float, float]:
        """Nearest centerline arclength to ``(x, y)`` close to ``s_hint``, and lateral offset.

        The returned arclength is unwrapped to lie near ``s_hint`` so callers
        can accumulate progress across laps.
        """
        L = self.lap_length
        best = None
        for seg in self.segments:
            u, offset, dist = seg.closest(x, y)
            s = seg.s_start + u
            s_unwrapped = s_hint + math.remainder(s - s_hint, L)
            if abs(s_unwrapped - s_hint) > window:
                continue
            if best is None or dist < best[0]:
                best = (dist, s_unwrapped, offset)
        if best is None:
            raise ValidationError(f"no centerline within {window} m of s={s_hint:.1f}")
        return best[1], best[2]


def sample_track(track: Track, arclength: float) -> tuple[tuple[float, float, float], float, float]:
    """Centerline position, tangent heading and grade at ``arclength`` (wraps per lap)."""
    if arclength < 0:
        raise ValidationError("arclength must be >= 0")
    seg, u = track.segment_at(arclength)
    return seg.point(u)


def _layout(turns: Sequence[TurnSpec], straights: Sequence[float], grade: float,
            transition: float) -> list[TrackSegment]:
    slope_grade = {Slope.INCLINE: grade, Slope.DECLINE: -grade, Slope.PLATEAU: 0.0}
    segs: list[TrackSegment] = []
    x = y = z = h = s = 0.0
    n = len(turns)
    for i, turn in enumerate(turns):
        g_prev = slope_grade[turns[i - 1].slope]
        g_arc = slope_grade[turn.slope]
        st = TrackSegment("straight", s, straights[i], x, y, z, h, grade_in=g_prev,
                          grade_out=g_arc, transition=transition)
        segs.append(st)
        (x, y, z), h, _ = st.point(st.length)
        s = st.s_end
        d = 1 if turn.direction is Turn.LEFT else -1
        arc = TrackSegment("arc", s, STIMULUS_RADIUS * math.radians(turn.sweep), x, y, z, h,
                           radius=STIMULUS_RADIUS, sweep=turn.sweep, direction=d,
                           slope=turn.slope, grade=g_arc)
        segs.append(arc)
        (x, y, z), h, _ = arc.point(arc.length)
        s = arc.s_end
    assert len(segs) == 2 * n
    return segs


def build_track(
    straight_length: float = 150.0,
    grade: float = 0.05,
    lane_width: float = 3.5,
    turns: Sequence[TurnSpec] = DEFAULT_TURNS,
    transition_length: float = 40.0,
    lanes: int = 4,
) -> Track:
    if not straight_length > 0:
        raise ValidationError("track.straight_length_m must be > 0")
    if not (lane_width > 0 and lanes > 0):
        raise ValidationError("track lane width and lane count must be > 0")
    if not (0 <= grade < 1):
        raise ValidationError("track.grade must be in [0, 1)")
    if not transition_length > 0:
        raise ValidationError("track.transition_length_m must be > 0")
    if straight_length < 2 * transition_length:
        raise ValidationError(
            "track.straight_length_m must be at least twice track.transition_length_m "
            "so both grade ramps fit on every straight"
        )
    turns = tuple(t if isinstance(t, TurnSpec) else TurnSpec(**t) for t in turns)
    combos = sorted((t.sweep, t.slope.value) for t in turns)
    expected = sorted((sw, sl.value) for sw in SWEEPS for sl in Slope)
    if combos != expected:
        raise ValidationError("track turns must cover each (sweep, slope) pair exactly once")
    net = sum(t.sweep * (1 if t.direction is Turn.LEFT else -1) for t in turns)
    if net not in (0, 360, -360):
        raise ValidationError(
            f"turn directions give net heading change {net} deg; a loop closed with "
            "straights needs 0 or +/-360"
        )

    n = len(turns)
    straights = [straight_length] * n
    segs = _layout(turns, straights, grade, transition_length)
    end, _, _ = segs[-1].point(segs[-1].length)
    gap = (end[0], end[1])

    # Lengthening straight i by a moves every later point by a * u_i; pick the
    # pair of straights whose adjustment keeps both as long as possible.
    headings = [segs[2 * i].heading0 for i in range(n)]
    min_len = 2 * transition_length
    best = None
    for i, j in combinations(range(n), 2):
        ci, si = math.cos(headings[i]), math.sin(headings[i])
        cj, sj = math.cos(headings[j]), math.sin(headings[j])
        det = ci * sj - si * cj
        if abs(det) < 1e-6:
            continue
        a = (-gap[0] * sj + gap[1] * cj) / det
        b = (-ci * gap[1] + si * gap[0]) / det
        shortest = min(straight_length + a, straight_length + b)
        if best is None or shortest > best[0]:
            best = (shortest, i, j, a, b)
    if best is None or best[0] < min_len:
        raise ValidationError(
            "loop cannot be closed with these parameters (a connecting straight would be "
            f"shorter than {min_len:g} m); increase track.straight_length_m"
        )
    _, i, j, a, b = best
    straights[i] += a
    straights[j] += b
    segs = _layout(turns, straights, grade, transition_length)
    return Track(tuple(segs), lane_width=lane_width, lanes=lanes)


def export_geometry(track: Track, spacing: float = 1.0) -> dict:
    """Segment list plus a centerline sampled every ``spacing`` metres, first point repeated last."""
    segments = []
    for seg in track.segments:
        rec = {"kind": seg.kind, "s_start": seg.s_start, "length": seg.length,
               "start": [seg.x0, seg.y0, seg.z0], "heading": seg.heading0}
        if seg.kind == "arc":
            rec.update(radius=seg.radius, sweep_deg=seg.sweep,
                       direction="left" if seg.direction > 0 else "right",
                       slope=seg.slope.value, grade=seg.grade)
        else:
            rec.update(grade_in=seg.grade_in, grade_out=seg.grade_out)
        segments.append(rec)
    L = track.lap_length
    n = int(math.floor(L / spacing))
    stations = [k * spacing for k in range(n + 1)]
    if stations[-1] < L:
        stations.append(L)
    centerline = []
    for s in stations:
        seg, u = (track.segments[-1], track.segments[-1].length) if s >= L else track.segment_at(s)
        (x, y, z), h, g = seg.point(u)
        centerline.append([s, x, y, z, h, g])
    return {
        "lap_length_m": L,
        "lane_width_m": track.lane_width,
        "lanes": track.lanes,
        "segments": segments,
        "centerline_columns": ["s", "x", "y", "z", "heading", "grade"],
        "centerline": centerline,
    }
