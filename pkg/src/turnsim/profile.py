"""Cubic-speed motion segments and the trapezoidal speed-adjustment plan.

A JerkProfile integrates a linear jerk ramp: J(t) = J0 + j*t, with zero
initial acceleration and zero initial distance.  The trapezoid plan
stretches or compresses the time spent covering a fixed distance so a
vehicle arrives at a downstream point at a chosen instant, returning to
its entry speed there.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple


class ProfileSample(NamedTuple):
    jerk: float
    accel: float
    speed: float
    distance: float


@dataclass(frozen=True)
class JerkProfile:
    """Motion segment with linearly varying jerk and zero initial acceleration."""

    start_speed: float
    start_jerk: float
    jerk_slope: float
    duration: float

    def __post_init__(self) -> None:
        if self.duration <= 0.0:
            raise ValueError("duration must be positive")

    def sample(self, t: float) -> ProfileSample:
        if t < -1e-12 or t > self.duration + 1e-9:
            raise ValueError(f"t={t} outside [0, {self.duration}]")
        t = min(max(t, 0.0), self.duration)
        j0, j, v0 = self.start_jerk, self.jerk_slope, self.start_speed
        jerk = j0 + j * t
        accel = j0 * t + 0.5 * j * t * t
        speed = v0 + 0.5 * j0 * t * t + j * t ** 3 / 6.0
        distance = v0 * t + j0 * t ** 3 / 6.0 + j * t ** 4 / 24.0
        return ProfileSample(jerk, accel, speed, distance)

    @property
    def end_speed(self) -> float:
        return self.sample(self.duration).speed

    @property
    def end_distance(self) -> float:
        return self.sample(self.duration).distance

    @property
    def terminal_jerk(self) -> float:
        return self.start_jerk + self.jerk_slope * self.duration


@dataclass(frozen=True)
class ApproachPlan:
    """Symmetric speed trapezoid: ramp to a peak, cruise, ramp back to the entry speed.

    For late targets the "peak" lies below the entry speed (an inverted
    trapezoid); ``peak_speed`` is the extremum either way.  ``feasible``
    is False when no plan at the given ramp rate covers the distance in
    the available time without breaching the speed cap (or the crawl
    floor); the returned plan is then the closest effort.
    """

    entry_speed: float
    peak_speed: float
    speed_cap: float
    desired_speed: float
    ramp_accel: float
    ramp_time: float
    cruise_time: float
    distance: float
    duration: float
    feasible: bool

    @property
    def max_speed(self) -> float:
        return max(self.entry_speed, self.peak_speed)

    def accel_at(self, t: float) -> float:
        sign = 1.0 if self.peak_speed >= self.entry_speed else -1.0
        if t < self.ramp_time:
            return sign * self.ramp_accel
        if t < self.ramp_time + self.cruise_time:
            return 0.0
        if t < self.duration:
            return -sign * self.ramp_accel
        return 0.0

    def speed_at(self, t: float) -> float:
        sign = 1.0 if self.peak_speed >= self.entry_speed else -1.0
        if t <= 0.0:
            return self.entry_speed
        if t < self.ramp_time:
            return self.entry_speed + sign * self.ramp_accel * t
        if t < self.ramp_time + self.cruise_time:
            return self.peak_speed
        if t < self.duration:
            back = self.duration - t
            return self.entry_speed + sign * self.ramp_accel * back
        return self.entry_speed

    def distance_at(self, t: float) -> float:
        sign = 1.0 if self.peak_speed >= self.entry_speed else -1.0
        r = sign * self.ramp_accel
        t = min(max(t, 0.0), self.duration)
        up_end = self.ramp_time
        cruise_end = self.ramp_time + self.cruise_time
        if t <= up_end:
            return self.entry_speed * t + 0.5 * r * t * t
        d = self.entry_speed * up_end + 0.5 * r * up_end * up_end
        if t <= cruise_end:
            return d + self.peak_speed * (t - up_end)
        d += self.peak_speed * self.cruise_time
        tau = t - cruise_end
        return d + self.peak_speed * tau - 0.5 * r * tau * tau


def trapezoid_approach(
    dist_to_decel_point: float,
    available_time: float,
    v_current: float,
    v_cap: float,
    ramp_accel: float = 1.0,
    v_floor: float = 0.1,
) -> ApproachPlan:
    """Plan a symmetric trapezoid covering the distance in exactly the available time.

    The peak solves the area-balance quadratic
    ``x^2 - r*T*x + r*(D - v0*T) = 0`` with ``x = peak - v0``.  If even a
    cap-limited plan cannot cover the distance in time (or a crawl at the
    floor cannot stall long enough), the closest-effort plan is returned
    with ``feasible=False``.
    """
    if dist_to_decel_point <= 0.0 or available_time <= 0.0:
        raise ValueError("distance and time must be positive")
    if v_current > v_cap + 1e-9:
        raise ValueError(f"current speed {v_current} already exceeds cap {v_cap}")

    d, t_avail, v0, r = dist_to_decel_point, available_time, v_current, ramp_accel
    v_des = d / t_avail
    slack = d - v0 * t_avail

    if abs(slack) < 1e-9:
        return ApproachPlan(v0, v0, v_cap, v_des, r, 0.0, t_avail, d, t_avail, True)

    # area balance for the speed excursion x = peak - v0:
    #   speed-up:  x^2 - r T x + r slack = 0   (smaller root)
    #   slow-down: x^2 + r T x - r slack = 0   (root in (-rT/2, 0))
    if slack > 0.0:
        disc = r * r * t_avail * t_avail - 4.0 * r * slack
        x = 0.5 * (r * t_avail - math.sqrt(disc)) if disc >= 0.0 else None
    else:
        disc = r * r * t_avail * t_avail + 4.0 * r * slack
        x = 0.5 * (-r * t_avail + math.sqrt(disc)) if disc >= 0.0 else None
    if x is not None:
        peak = v0 + x
        if v_floor <= peak <= v_cap:
            ramp_time = abs(x) / r
            cruise = max(t_avail - 2.0 * ramp_time, 0.0)
            return ApproachPlan(v0, peak, v_cap, v_des, r, ramp_time, cruise, d, t_avail, True)

    # closest effort: pin the peak at the violated bound; duration then
    # deviates from the requested time and the plan is flagged infeasible
    if slack > 0.0:
        peak = min(v_cap, math.sqrt(v0 * v0 + r * d))
    else:
        peak = max(v_floor, 1e-6)
        if v0 * v0 - r * d > peak * peak:
            peak = math.sqrt(v0 * v0 - r * d)
    ramp_time = abs(peak - v0) / r
    cruise_dist = d - (v0 + peak) * ramp_time
    cruise = max(cruise_dist, 0.0) / max(peak, 1e-9)
    duration = 2.0 * ramp_time + cruise
    return ApproachPlan(v0, peak, v_cap, v_des, r, ramp_time, cruise, d, duration, False)


def min_cover_time(distance: float, v_current: float, v_cap: float, ramp_accel: float = 1.0) -> float:
    """Shortest time to cover a distance: ramp to the cap, then cruise.

    Lower bound for feasible trapezoid arrival times (the symmetric
    down-ramp is not required when arriving as early as possible is the
    question; the trapezoid itself needs slightly longer).
    """
    if distance <= 0.0:
        return 0.0
    x = v_cap - v_current
    ramp_time = x / ramp_accel if x > 0.0 else 0.0
    ramp_dist = v_current * ramp_time + 0.5 * ramp_accel * ramp_time * ramp_time
    if ramp_dist >= distance:
        # solve v0*t + r t^2/2 = distance
        return (-v_current + math.sqrt(v_current * v_current + 2.0 * ramp_accel * distance)) / ramp_accel
    return ramp_time + (distance - ramp_dist) / v_cap


def min_trapezoid_time(distance: float, v_current: float, v_cap: float, ramp_accel: float = 1.0) -> float:
    """Shortest *trapezoid* arrival time: ramp up to the cap, cruise, ramp back down.

    Unlike :func:`min_cover_time` the plan must return to the entry speed
    at the target point, so both ramps consume time.
    """
    if distance <= 0.0:
        return 0.0
    x = v_cap - v_current
    if x <= 0.0:
        return distance / v_current
    ramp_time = x / ramp_accel
    two_ramp_dist = (v_current + v_cap) * ramp_time
    if two_ramp_dist <= distance:
        return 2.0 * ramp_time + (distance - two_ramp_dist) / v_cap
    # triangle profile: peak below the cap, distance = (v0 + peak) * ramp
    # with ramp = (peak - v0)/r  ->  peak^2 - v0^2 = r * distance
    peak = math.sqrt(v_current * v_current + ramp_accel * distance)
    return 2.0 * (peak - v_current) / ramp_accel
