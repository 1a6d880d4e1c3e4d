"""Variable speed profiles that keep irregular block lengths on the rhythm.

With uniform blocks a platoon cruises at constant speed and reaches every
crossroads an integer number of rhythm periods after the last one.  Blocks
of mixed length break that alignment, so instead each block gets its own
speed profile: the block travel time is rounded up to the next integer
multiple of the rhythm, and a piecewise-constant-acceleration curve is
built that covers the block in exactly that time while respecting the
acceleration, deceleration, and crossing-speed limits.  Crossings then
stay on the entry stagger and the alternating-window argument still holds.

A profile over one block has one of two shapes, selected by a hold speed
``theta`` in [0, v_max]:

* ``theta <= entry speed``: brake at the limit down to ``theta``, hold,
  then accelerate at the limit so the curve ends at the minimum crossing
  speed exactly when the block time runs out (upper envelope of the three
  bounding lines).  If ``theta`` is at least the minimum crossing speed
  the final ramp never activates and the platoon exits at ``theta``.
* ``theta > entry speed``: accelerate at the limit up to ``theta`` and
  hold (lower envelope of the two bounding lines).

Distance covered is continuous and nondecreasing in ``theta``, so the
unique block length is matched by bisection.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import combinations

LENGTH_TOL_M = 1e-9
TIME_EPS = 1e-9
SPEED_EPS = 1e-9


def _entry_in_band(spec: "SpeedCurveSpec", entry_speed: float) -> float:
    """Validate the entry speed against the admissible band and clamp ulps."""
    if not (
        spec.v_cross_min - SPEED_EPS <= entry_speed <= spec.v_max + SPEED_EPS
    ):
        raise CurveError(
            f"entry speed {entry_speed} outside "
            f"[{spec.v_cross_min}, {spec.v_max}]"
        )
    return min(max(entry_speed, spec.v_cross_min), spec.v_max)


class CurveError(Exception):
    """No speed profile exists under the given kinematic limits."""


@dataclass(frozen=True)
class SpeedCurveSpec:
    """Kinematic limits and block layout of one street.

    ``lengths`` are the crossroads-to-crossroads distances in driving
    order.  ``v0`` is the speed at the first crossroads, where the clock
    of the profile starts.
    """

    v_max: float
    accel_max: float
    decel_max: float
    v_cross_min: float
    lengths: tuple[float, ...]
    v0: float
    rhythm_s: float

    def __post_init__(self):
        object.__setattr__(self, "lengths", tuple(float(l) for l in self.lengths))
        if self.v_max <= 0 or self.accel_max <= 0 or self.decel_max <= 0:
            raise ValueError("speed and acceleration limits must be positive")
        if not 0 < self.v_cross_min <= self.v_max:
            raise ValueError("v_cross_min must lie in (0, v_max]")
        if not self.v_cross_min <= self.v0 <= self.v_max:
            raise ValueError("v0 must lie in [v_cross_min, v_max]")
        if self.rhythm_s <= 0:
            raise ValueError("rhythm_s must be positive")
        if not self.lengths or any(l <= 0 for l in self.lengths):
            raise ValueError("lengths must be non-empty and positive")

    @property
    def min_rhythm_s(self) -> float:
        """Shortest rhythm with guaranteed profiles: full brake + full ramp."""
        return self.v_max / self.decel_max + self.v_cross_min / self.accel_max

    @property
    def min_length_m(self) -> float:
        """Shortest block with guaranteed profiles: brake-then-ramp V-shape."""
        return self.v_max**2 / (2 * self.decel_max) + self.v_cross_min**2 / (
            2 * self.accel_max
        )


def feasibility_check(spec: SpeedCurveSpec) -> list[bool]:
    """Per-block existence guarantee; boundary values count as feasible.

    Both conditions must hold: the rhythm leaves room for a full brake
    followed by a full ramp back to crossing speed, and the block is long
    enough to absorb the V-shaped worst case.  The rhythm condition is
    shared by all blocks.
    """
    rhythm_ok = spec.rhythm_s >= spec.min_rhythm_s - TIME_EPS
    floor = spec.min_length_m - LENGTH_TOL_M
    return [rhythm_ok and length >= floor for length in spec.lengths]


def max_reach_m(spec: SpeedCurveSpec, entry_speed: float, multiples: int) -> float:
    """Distance covered by flooring the accelerator for ``multiples`` periods."""
    window = multiples * spec.rhythm_s
    ramp = (spec.v_max - entry_speed) / spec.accel_max
    if window <= ramp:
        return entry_speed * window + 0.5 * spec.accel_max * window**2
    ramp_dist = (spec.v_max**2 - entry_speed**2) / (2 * spec.accel_max)
    return ramp_dist + spec.v_max * (window - ramp)


def min_integer_travel(spec: SpeedCurveSpec, length: float, entry_speed: float) -> int:
    """Least period count whose maximum reach covers the block."""
    entry_speed = _entry_in_band(spec, entry_speed)
    for a in range(1, 100_000):
        if max_reach_m(spec, entry_speed, a) >= length - LENGTH_TOL_M:
            return a
    raise CurveError(f"block of {length} m unreachable in 100000 periods")


def _envelope(
    spec: SpeedCurveSpec, entry_speed: float, theta: float, window: float
) -> tuple[tuple[float, float], ...]:
    """Breakpoints (t, v) of the profile on [0, window].

    The profile is the max (brake branch) or min (accelerate branch) of a
    small set of lines, hence piecewise linear with kinks only where two
    lines cross; evaluating at 0, the window end, and every pairwise
    crossing captures it exactly.
    """
    if theta <= entry_speed:
        # brake to theta, hold, ramp so that v(window) = v_cross_min
        lines = [
            (entry_speed, -spec.decel_max),
            (theta, 0.0),
            (spec.v_cross_min - spec.accel_max * window, spec.accel_max),
        ]
        pick = max
    else:
        lines = [(entry_speed, spec.accel_max), (theta, 0.0)]
        pick = min
    times = {0.0, window}
    for (b1, s1), (b2, s2) in combinations(lines, 2):
        if s1 != s2:
            t = (b2 - b1) / (s1 - s2)
            if TIME_EPS < t < window - TIME_EPS:
                times.add(t)
    return tuple(
        (t, pick(b + s * t for b, s in lines)) for t in sorted(times)
    )


def _area(points) -> float:
    """Exact integral of a piecewise-linear speed profile."""
    return sum(
        (t2 - t1) * (v1 + v2) / 2.0
        for (t1, v1), (t2, v2) in zip(points, points[1:])
    )


def covered_distance(
    spec: SpeedCurveSpec, entry_speed: float, theta: float, multiples: int
) -> float:
    """Distance covered by the hold-speed profile over ``multiples`` periods."""
    window = multiples * spec.rhythm_s
    return _area(_envelope(spec, entry_speed, theta, window))


@dataclass(frozen=True)
class CurveSegment:
    """Speed profile over one block: piecewise linear in time."""

    length_m: float
    multiples: int
    duration_s: float
    entry_speed: float
    exit_speed: float
    hold_speed: float
    points: tuple[tuple[float, float], ...]

    def speed_at(self, t: float) -> float:
        if t < -TIME_EPS or t > self.duration_s + TIME_EPS:
            raise ValueError(f"t={t} outside [0, {self.duration_s}]")
        pts = self.points
        if t <= pts[0][0]:
            return pts[0][1]
        for (t1, v1), (t2, v2) in zip(pts, pts[1:]):
            if t <= t2:
                if t2 == t1:
                    return v2
                return v1 + (v2 - v1) * (t - t1) / (t2 - t1)
        return pts[-1][1]

    def distance_m(self) -> float:
        return _area(self.points)

    def sample(self, dt: float) -> list[tuple[float, float]]:
        """(t, v) table at step dt, endpoint included; for export/plotting."""
        if dt <= 0:
            raise ValueError("dt must be positive")
        steps = int(math.floor(self.duration_s / dt + TIME_EPS))
        table = [(k * dt, self.speed_at(k * dt)) for k in range(steps + 1)]
        if table[-1][0] < self.duration_s - TIME_EPS:
            table.append((self.duration_s, self.speed_at(self.duration_s)))
        return table


def construct_curve(
    spec: SpeedCurveSpec,
    length: float,
    entry_speed: float,
    multiples: int | None = None,
) -> CurveSegment:
    """Profile covering ``length`` in exactly ``multiples`` rhythm periods.

    ``multiples`` defaults to the least feasible count.  The hold speed is
    found by bisection: covered distance is continuous and nondecreasing
    in the hold speed, and the feasibility conditions guarantee the target
    length is bracketed between the full-brake and full-throttle extremes.
    """
    entry_speed = _entry_in_band(spec, entry_speed)
    if multiples is None:
        multiples = min_integer_travel(spec, length, entry_speed)
    window = multiples * spec.rhythm_s

    def covered(theta: float) -> float:
        return covered_distance(spec, entry_speed, theta, multiples)

    lo, hi = 0.0, spec.v_max
    d_lo, d_hi = covered(lo), covered(hi)
    if length < d_lo - LENGTH_TOL_M or length > d_hi + LENGTH_TOL_M:
        raise CurveError(
            f"block of {length} m not bracketed: profile covers "
            f"[{d_lo:.6f}, {d_hi:.6f}] m in {multiples} period(s); "
            "feasibility conditions violated"
        )
    theta = None
    for _ in range(200):
        mid = (lo + hi) / 2.0
        d_mid = covered(mid)
        if abs(d_mid - length) <= LENGTH_TOL_M:
            theta = mid
            break
        if d_mid < length:
            lo = mid
        else:
            hi = mid
    if theta is None:
        # interval collapsed to float resolution; take the closer end
        theta = lo if abs(covered(lo) - length) <= abs(covered(hi) - length) else hi
        if abs(covered(theta) - length) > 1e-6:
            raise CurveError(f"bisection failed to match {length} m")
    points = _envelope(spec, entry_speed, theta, window)
    return CurveSegment(
        length_m=length,
        multiples=multiples,
        duration_s=window,
        entry_speed=points[0][1],
        exit_speed=points[-1][1],
        hold_speed=theta,
        points=points,
    )


@dataclass(frozen=True)
class SpeedCurve:
    """Chained profile of a whole street.

    ``arrival_epochs[i]`` is the arrival time at crossroads i relative to
    the first crossroads, always an integer number of rhythm periods.
    """

    spec: SpeedCurveSpec
    segments: tuple[CurveSegment, ...]

    @property
    def arrival_epochs(self) -> tuple[float, ...]:
        epochs = [0.0]
        for seg in self.segments:
            epochs.append(epochs[-1] + seg.duration_s)
        return tuple(epochs)

    @property
    def duration_s(self) -> float:
        return sum(seg.duration_s for seg in self.segments)

    def sample(self, dt: float) -> list[tuple[float, float]]:
        """Street-wide (t, v) table; segment boundaries appear once."""
        table: list[tuple[float, float]] = []
        offset = 0.0
        for seg in self.segments:
            part = [(offset + t, v) for t, v in seg.sample(dt)]
            if table and part and abs(part[0][0] - table[-1][0]) <= TIME_EPS:
                part = part[1:]
            table.extend(part)
            offset += seg.duration_s
        return table


def generate_profile(spec: SpeedCurveSpec) -> SpeedCurve:
    """Run the full generation over all blocks, chaining exit speeds."""
    segments = []
    speed = spec.v0
    for length in spec.lengths:
        seg = construct_curve(spec, length, speed)
        segments.append(seg)
        speed = seg.exit_speed
    return SpeedCurve(spec=spec, segments=tuple(segments))


def crossroads_travel_offsets(
    net,
    curves_by_street: dict[int, SpeedCurve],
    entry_travel_s: float,
) -> dict[tuple[int, int], float]:
    """Entrance-to-crossroads travel times implied by per-street profiles.

    Feed the result to ``verify_conflict_free`` via ``travel_s``.  The
    entrance approach is driven at constant speed (``entry_travel_s``);
    the profile clock starts at the first crossroads.
    """
    from .network import KIND_CROSSROADS

    offsets: dict[tuple[int, int], float] = {}
    for street in net.streets:
        curve = curves_by_street.get(street.id)
        if curve is None:
            continue
        epochs = curve.arrival_epochs
        dist = 0.0
        order = []
        for link_id in street.links:
            link = net.link(link_id)
            dist += link.length
            if net.node(link.head).kind == KIND_CROSSROADS:
                order.append(link.head)
        if len(order) != len(epochs):
            raise CurveError(
                f"street {street.id}: {len(order)} crossroads but profile "
                f"schedules {len(epochs)}"
            )
        for node_id, epoch in zip(order, epochs):
            offsets[(street.id, node_id)] = entry_travel_s + epoch
    return offsets
