"""Constant-speed occupancy prediction of the opposing stream and gap-window extraction.

Every visible opposing vehicle maps to the time interval during which it
occupies its lane's conflict area (clearances applied before and past,
plus its own length).  Gap windows are the complement of the union of
those intervals, trimmed to windows long enough for the subject's
crossing.  The pass/approach vehicle sets partition visible traffic by
whether a vehicle clears the conflict area before the subject's
predicted arrival.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .geometry import ConflictClearances

NEAR = "near"
FAR = "far"
STOPPED_EPS = 0.01  # below this speed a vehicle is treated as stationary


@dataclass(frozen=True)
class OpposingObservation:
    vehicle_id: int
    lane: str  # NEAR or FAR
    distance_to_conflict: float  # front bumper to the conflict point, + upstream
    speed: float
    length: float = 4.6


@dataclass(frozen=True)
class OpposingSnapshot:
    timestamp: float
    visibility_range: float
    vehicles: tuple[OpposingObservation, ...]


@dataclass(frozen=True)
class GapWindow:
    start: float
    end: float

    def __post_init__(self) -> None:
        if not self.end > self.start:
            raise ValueError("window end must exceed start")

    @property
    def duration(self) -> float:
        return self.end - self.start


@dataclass(frozen=True)
class VehicleSets:
    near_pass: frozenset
    near_approach: frozenset
    far_pass: frozenset
    far_approach: frozenset


def merge_intervals(intervals):
    """Sorted disjoint union of (start, end) pairs."""
    items = sorted(i for i in intervals if i[1] > i[0])
    merged = []
    for s, e in items:
        if merged and s <= merged[-1][1]:
            merged[-1] = (merged[-1][0], max(merged[-1][1], e))
        else:
            merged.append((s, e))
    return merged


def complement_intervals(occupied, start=0.0, horizon=math.inf):
    """Gaps between occupied intervals within [start, horizon)."""
    gaps = []
    cursor = start
    for s, e in merge_intervals(occupied):
        if e <= cursor:
            continue
        if s > cursor:
            gaps.append((cursor, min(s, horizon)))
        cursor = max(cursor, e)
        if cursor >= horizon:
            break
    if cursor < horizon:
        gaps.append((cursor, horizon))
    return [g for g in gaps if g[1] > g[0]]


def occupancy_interval(distance: float, speed: float, length: float, pass_clear: float, approach_clear: float):
    """Predicted [enter, exit] of the conflict area under constant speed.

    Returns None when the vehicle has already cleared (or, if stationary,
    will never arrive); a stationary vehicle inside the area blocks
    forever.
    """
    enter_dist = distance - approach_clear
    exit_dist = distance + pass_clear + length
    if speed < STOPPED_EPS:
        if enter_dist <= 0.0 <= exit_dist:
            return (0.0, math.inf)
        return None
    start = enter_dist / speed
    end = exit_dist / speed
    if end <= 0.0:
        return None
    return (max(start, 0.0), end)


def lane_clearances(clearances: ConflictClearances, lane: str) -> tuple[float, float]:
    if lane == NEAR:
        return clearances.near_pass, clearances.near_approach
    if lane == FAR:
        return clearances.far_pass, clearances.far_approach
    raise ValueError(f"unknown opposing lane {lane!r}")


def lane_occupancies(snapshot: OpposingSnapshot, clearances: ConflictClearances):
    """Per-lane occupancy intervals, relative to the snapshot timestamp."""
    out = {NEAR: [], FAR: []}
    for veh in snapshot.vehicles:
        pass_clear, approach_clear = lane_clearances(clearances, veh.lane)
        occ = occupancy_interval(veh.distance_to_conflict, veh.speed, veh.length, pass_clear, approach_clear)
        if occ is not None:
            out[veh.lane].append(occ)
    return out


def predict_gaps(
    snapshot: OpposingSnapshot,
    clearances: ConflictClearances,
    cav_eta_to_conflict: float,
    crossing_duration: float,
):
    """Vehicle sets and joint gap windows for the opposing stream.

    Windows are intervals (relative to the snapshot) during which both
    conflict areas are predicted clear, at least ``crossing_duration``
    long.  A vehicle belongs to the pass set when its predicted occupancy
    ends no later than the subject's conflict-entry time.
    """
    sets = {NEAR: {"pass": set(), "approach": set()}, FAR: {"pass": set(), "approach": set()}}
    occupied = []
    for veh in snapshot.vehicles:
        pass_clear, approach_clear = lane_clearances(clearances, veh.lane)
        occ = occupancy_interval(veh.distance_to_conflict, veh.speed, veh.length, pass_clear, approach_clear)
        if occ is None or occ[1] <= cav_eta_to_conflict:
            sets[veh.lane]["pass"].add(veh.vehicle_id)
        else:
            sets[veh.lane]["approach"].add(veh.vehicle_id)
        if occ is not None:
            occupied.append(occ)

    windows = [
        GapWindow(s, e)
        for s, e in complement_intervals(occupied)
        if (e - s) >= crossing_duration
    ]
    vehicle_sets = VehicleSets(
        near_pass=frozenset(sets[NEAR]["pass"]),
        near_approach=frozenset(sets[NEAR]["approach"]),
        far_pass=frozenset(sets[FAR]["pass"]),
        far_approach=frozenset(sets[FAR]["approach"]),
    )
    return vehicle_sets, windows


def launch_slots(lane_clear: dict, crossing_offsets: dict, margin: float):
    """Launch-time intervals satisfying the per-lane crossing schedule.

    ``lane_clear`` maps lane -> clear intervals; ``crossing_offsets`` maps
    lane -> (enter, exit) offsets of the subject's occupancy relative to a
    launch at t=0.  A launch at t is valid when, for each lane, some clear
    interval contains [t + enter - margin, t + exit + margin].
    """
    allowed = None
    for lane, (enter, exit_) in crossing_offsets.items():
        lane_allowed = []
        for c0, c1 in lane_clear[lane]:
            lo = c0 - enter + margin
            hi = c1 - exit_ - margin
            if hi > lo or math.isinf(c1):
                lane_allowed.append((lo, hi if not math.isinf(c1) else math.inf))
        lane_allowed = merge_intervals(lane_allowed)
        if allowed is None:
            allowed = lane_allowed
        else:
            allowed = _intersect(allowed, lane_allowed)
    return allowed or []


def _intersect(a, b):
    out = []
    i = j = 0
    while i < len(a) and j < len(b):
        s = max(a[i][0], b[j][0])
        e = min(a[i][1], b[j][1])
        if e > s:
            out.append((s, e))
        if a[i][1] <= b[j][1]:
            i += 1
        else:
            j += 1
    return out


def earliest_launch(slots, not_before: float):
    """First admissible launch time at or after ``not_before``."""
    for s, e in slots:
        if e <= not_before:
            continue
        return max(s, not_before)
    return None
