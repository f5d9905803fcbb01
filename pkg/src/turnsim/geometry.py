"""Intersection layout, the parabolic left-turn path, and conflict clearances.

The turn path is modeled as a parabolic arc spanning a chord of 3 lane
widths with an apex height of 2.5 lane widths.  Stations along the path
are arc lengths measured from the stop line.  The chord of the parabola
points across the opposing lanes, so transverse progress (distance from
the subject's lane centerline toward the minor street) maps directly to
lane-boundary crossings.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

HEIGHT_PER_LANE_WIDTH = 2.5
CHORD_PER_LANE_WIDTH = 3.0


def arc_length(height: float, chord: float) -> float:
    """Closed-form arc length of a full parabolic arc.

    ``height`` is the apex offset from the chord midpoint, ``chord`` the
    straight-line span between the arc's endpoints.
    """
    if height <= 0.0 or chord <= 0.0:
        raise ValueError(f"height and chord must be positive, got {height}, {chord}")
    root = math.sqrt(chord * chord + 16.0 * height * height)
    return 0.5 * root + chord * chord / (8.0 * height) * math.log((4.0 * height + root) / chord)


def _slope(height: float, chord: float, u: float) -> float:
    # derivative of h(u) = height * (1 - (2u/chord)^2)
    return -8.0 * height * u / (chord * chord)


def partial_arc_length(height: float, chord: float, u0: float, u1: float, n: int = 2048) -> float:
    """Arc length between chord coordinates u0 and u1 by composite Simpson rule.

    n is the (even) number of subintervals; the integrand is smooth so the
    default resolves well below 1e-9 relative error for realistic inputs.
    """
    if u1 < u0:
        raise ValueError("u1 must be >= u0")
    if u1 == u0:
        return 0.0
    if n % 2:
        n += 1
    h = (u1 - u0) / n
    total = 0.0
    for i in range(n + 1):
        u = u0 + i * h
        w = 1.0 if i in (0, n) else (4.0 if i % 2 else 2.0)
        s = _slope(height, chord, u)
        total += w * math.sqrt(1.0 + s * s)
    return total * h / 3.0


@dataclass(frozen=True)
class IntersectionLayout:
    """Four-leg intersection: two-lane major road, one-lane minor road."""

    lane_width: float = 3.6
    major_lanes_per_direction: int = 2
    minor_lanes: int = 1
    major_length: float = 337.0
    major_speed_limit: float = 13.4
    minor_speed_limit: float = 7.0
    stop_line_position: float = 337.0

    def __post_init__(self) -> None:
        if self.lane_width <= 0.0:
            raise ValueError("lane_width must be positive")
        for name in ("major_length", "major_speed_limit", "minor_speed_limit", "stop_line_position"):
            if getattr(self, name) <= 0.0:
                raise ValueError(f"{name} must be positive")
        if self.major_lanes_per_direction != 2:
            raise ValueError("conflict-clearance formulas assume a two-lane opposing approach")


@dataclass(frozen=True)
class TurnPath:
    """Parabolic turn path with conflict-area stations.

    ``near_entry_station`` is the arc length from the stop line to the
    near edge of the first (closest) opposing lane; ``far_entry_station``
    to the near edge of the second lane.  Exit stations mark the far
    edges.  ``zone_half_length`` is the half-extent of each conflict area
    measured along the opposing travel direction.
    """

    lane_width: float
    height: float
    chord: float
    total_arc_length: float
    near_entry_station: float
    near_exit_station: float
    far_entry_station: float
    far_exit_station: float
    zone_half_length: float
    _station_grid: tuple = field(repr=False, default=())
    _transverse_grid: tuple = field(repr=False, default=())

    def transverse_at(self, station: float) -> float:
        """Transverse progress (m across the opposing lanes) at a path station."""
        grid_s = self._station_grid
        grid_t = self._transverse_grid
        if station <= 0.0:
            return 0.0
        if station >= grid_s[-1]:
            return grid_t[-1]
        lo, hi = 0, len(grid_s) - 1
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if grid_s[mid] <= station:
                lo = mid
            else:
                hi = mid
        frac = (station - grid_s[lo]) / (grid_s[hi] - grid_s[lo])
        return grid_t[lo] + frac * (grid_t[hi] - grid_t[lo])


def path_station_of_conflicts(layout: IntersectionLayout, grid_points: int = 513) -> TurnPath:
    """Build the turn path and locate the conflict-area crossings.

    The turn starts at the stop line in the center of the subject's lane,
    half a lane width before the road centerline; the opposing lanes span
    transverse offsets [w/2, 3w/2] (near) and [3w/2, 5w/2] (far).  Crossing
    stations come from partial arc-length integration of the parabola.
    """
    w = layout.lane_width
    height = HEIGHT_PER_LANE_WIDTH * w
    chord = CHORD_PER_LANE_WIDTH * w
    total = arc_length(height, chord)
    half = chord / 2.0

    def station_at_transverse(transverse: float) -> float:
        return partial_arc_length(height, chord, -half, transverse - half)

    near_entry = station_at_transverse(0.5 * w)
    near_exit = station_at_transverse(1.5 * w)
    far_entry = near_exit
    far_exit = station_at_transverse(2.5 * w)

    # conflict-area extent along the opposing lane = spread of the parabola
    # height over the crossed band; both bands share it by symmetry
    h_inner = height * (1.0 - (2.0 * (-w) / chord) ** 2)
    zone_half = (height - h_inner) / 2.0

    # dense station->transverse table for band-membership lookups
    stations = []
    transverses = []
    for i in range(grid_points):
        u = -half + (i / (grid_points - 1)) * chord
        stations.append(partial_arc_length(height, chord, -half, u, n=256))
        transverses.append(u + half)
    stations[-1] = total

    return TurnPath(
        lane_width=w,
        height=height,
        chord=chord,
        total_arc_length=total,
        near_entry_station=near_entry,
        near_exit_station=near_exit,
        far_entry_station=far_entry,
        far_exit_station=far_exit,
        zone_half_length=zone_half,
        _station_grid=tuple(stations),
        _transverse_grid=tuple(transverses),
    )


@dataclass(frozen=True)
class ConflictClearances:
    """Per-lane clearance distances around the conflict areas.

    ``*_pass`` is how far past the conflict area an opposing vehicle must
    be to count as having cleared it; ``*_approach`` is how close before
    it an approaching vehicle starts to count as occupying.
    """

    near_pass: float
    near_approach: float
    far_pass: float
    far_approach: float
    edge_margin: float
    approach_buffer: float
    vehicle_width: float


def conflict_clearances(
    lane_width: float,
    vehicle_width: float,
    edge_margin: float,
    approach_buffer: float,
    formula: str = "verbatim",
) -> ConflictClearances:
    """Clearance distances before/past the two conflict areas.

    ``formula="verbatim"`` keeps the sqrt(lane_width) base terms as
    published even though they carry sqrt-meter units; ``"linearized"``
    reads them as linear in lane_width instead.  Negative pass-side
    clearances (wide vehicle, narrow lane) are clamped to zero with a
    warning since a negative clearance is geometrically meaningless.
    """
    if lane_width <= 0.0 or vehicle_width < 0.0 or edge_margin < 0.0 or approach_buffer < 0.0:
        raise ValueError("lane_width must be positive and margins non-negative")
    if formula == "verbatim":
        base = math.sqrt(lane_width)
    elif formula == "linearized":
        base = lane_width
    else:
        raise ValueError(f"unknown conflict formula {formula!r}")
    near_base = base
    far_base = 1.41 * base

    half_car = vehicle_width / 2.0
    near_pass = near_base - half_car - edge_margin
    far_pass = far_base - half_car - edge_margin
    near_approach = near_base + half_car + edge_margin + approach_buffer
    far_approach = far_base + half_car + edge_margin + approach_buffer

    if near_pass < 0.0 or far_pass < 0.0:
        warnings.warn(
            "pass-side conflict clearance is negative (wide vehicle or narrow lane); clamping to 0",
            stacklevel=2,
        )
        near_pass = max(0.0, near_pass)
        far_pass = max(0.0, far_pass)

    return ConflictClearances(
        near_pass=near_pass,
        near_approach=near_approach,
        far_pass=far_pass,
        far_approach=far_approach,
        edge_margin=edge_margin,
        approach_buffer=approach_buffer,
        vehicle_width=vehicle_width,
    )
