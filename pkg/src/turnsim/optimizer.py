"""Constrained solves for the stop-bar deceleration, turn acceleration, and corridor schedule.

All three problems are small enough to solve by deterministic dense grid
search with local refinement after eliminating two variables through the
zero-terminal-acceleration identity (start jerk = -slope*T/2, so
T = (12*|dv|/|slope|)^(1/3)).  A plain uniform-grid oracle provides an
independent route for every solve; it validates its winner through the
jerk-profile kinematics rather than the closed-form identities.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .profile import JerkProfile

BOUND_SHRINK = 1e-9  # open bounds are treated as closed bounds shrunk by this


@dataclass(frozen=True)
class InflowProblem:
    """Decelerate to the stop bar: end speed near zero, positive jerk slope."""

    v_start: float
    v_end_min: float = 0.1
    v_end_max: float = 2.5
    j0_min: float = -1.5
    j0_max: float = 1.5
    slope_min: float = 0.1
    slope_max: float = 0.8
    t_min: float = 0.0
    t_max: float = 60.0


def _reorder_slope_bounds(lo: float, hi: float) -> tuple[float, float]:
    if lo > hi:
        warnings.warn(
            f"jerk-slope bounds ({lo}, {hi}) are an empty interval as given; reordering",
            stacklevel=3,
        )
        return hi, lo
    return lo, hi


@dataclass(frozen=True)
class OutflowProblem:
    """Accelerate into the minor street: end speed in the minor band, negative jerk slope."""

    v_start: float
    v_end_min: float = 6.0
    v_end_max: float = 7.0
    j0_min: float = -1.5
    j0_max: float = 1.5
    slope_min: float = -0.6
    slope_max: float = -0.2
    t_min: float = 5.0
    t_max: float = 60.0

    def __post_init__(self) -> None:
        lo, hi = _reorder_slope_bounds(self.slope_min, self.slope_max)
        object.__setattr__(self, "slope_min", lo)
        object.__setattr__(self, "slope_max", hi)
        if self.slope_max >= 0.0:
            raise ValueError("outflow jerk slope must be negative")


@dataclass(frozen=True)
class BaseAvProblem:
    """Corridor travel-time schedule: pick entry speed and acceleration."""

    d_in: float
    v_max: float = 13.4
    v_in_min: float = 11.5
    v_in_max: float = 12.5
    a_in_min: float = 0.5
    a_in_max: float = 1.5
    t_max: float = 60.0


@dataclass(frozen=True)
class SolveResult:
    """Solution of an inflow/outflow solve in reduced coordinates."""

    feasible: bool
    jerk_slope: float = math.nan
    start_jerk: float = math.nan
    end_speed: float = math.nan
    duration: float = math.nan
    objective: float = math.inf

    def profile(self, v_start: float) -> JerkProfile:
        if not self.feasible:
            raise ValueError("no profile for an infeasible solve")
        return JerkProfile(
            start_speed=v_start,
            start_jerk=self.start_jerk,
            jerk_slope=self.jerk_slope,
            duration=self.duration,
        )


@dataclass(frozen=True)
class BaseAvSchedule:
    feasible: bool
    v_in: float = math.nan
    a_in: float = math.nan
    ramp_time: float = math.nan
    cruise_time: float = math.nan
    total_time: float = math.inf


def stopping_distance(v_max: float, reaction_time: float, decel: float) -> float:
    """Distance needed to react and brake to rest from v_max at a (negative) decel."""
    if decel >= 0.0:
        raise ValueError("decel must be negative")
    if v_max < 0.0 or reaction_time < 0.0:
        raise ValueError("v_max and reaction_time must be non-negative")
    return reaction_time * v_max - v_max * v_max / (2.0 * decel)


def _grid_best(v_start, dv_sign, mag_lo, mag_hi, v_lo, v_hi, j0_cap, t_lo, t_hi, n):
    """Best feasible (|slope|, v_end) on an n x n grid; returns (obj, mag, v_end) or None.

    dv_sign=+1 solves a deceleration (dv = v_start - v_end), -1 an
    acceleration.  Objective is the terminal jerk magnitude |slope|*T/2.
    """
    mags = np.linspace(mag_lo, mag_hi, n)
    vs = np.linspace(v_lo, v_hi, n)
    m, v = np.meshgrid(mags, vs, indexing="ij")
    dv = dv_sign * (v_start - v)
    with np.errstate(invalid="ignore"):
        t = np.cbrt(12.0 * dv / m)
    obj = 0.5 * m * t
    feas = (dv > 0.0) & (t > t_lo) & (t < t_hi) & (obj < j0_cap)
    if not feas.any():
        return None
    masked = np.where(feas, obj, np.inf)
    idx = int(np.argmin(masked))
    i, k = divmod(idx, n)
    return float(masked.flat[idx]), float(mags[i]), float(vs[k])


def _solve_reduced(v_start, dv_sign, mag_lo, mag_hi, v_lo, v_hi, j0_cap, t_lo, t_hi) -> SolveResult:
    n = 481
    best = _grid_best(v_start, dv_sign, mag_lo, mag_hi, v_lo, v_hi, j0_cap, t_lo, t_hi, n)
    if best is None:
        return SolveResult(feasible=False)
    _, mag, v_end = best
    dm = (mag_hi - mag_lo) / (n - 1)
    dv = (v_hi - v_lo) / (n - 1)
    for _ in range(3):
        lo_m, hi_m = max(mag_lo, mag - dm), min(mag_hi, mag + dm)
        lo_v, hi_v = max(v_lo, v_end - dv), min(v_hi, v_end + dv)
        refined = _grid_best(v_start, dv_sign, lo_m, hi_m, lo_v, hi_v, j0_cap, t_lo, t_hi, 61)
        if refined is None:
            break
        _, mag, v_end = refined
        dm = (hi_m - lo_m) / 60.0
        dv = (hi_v - lo_v) / 60.0
    delta_v = dv_sign * (v_start - v_end)
    duration = (12.0 * delta_v / mag) ** (1.0 / 3.0)
    slope = dv_sign * mag
    start_jerk = -slope * duration / 2.0
    objective = mag * duration / 2.0
    return SolveResult(
        feasible=True,
        jerk_slope=slope,
        start_jerk=start_jerk,
        end_speed=v_end,
        duration=duration,
        objective=objective,
    )


def solve_inflow(p: InflowProblem) -> SolveResult:
    """Minimize the terminal jerk of the deceleration profile reaching the stop bar."""
    if p.v_start <= p.v_end_max:
        return SolveResult(feasible=False)
    e = BOUND_SHRINK
    return _solve_reduced(
        p.v_start,
        +1.0,
        p.slope_min + e,
        p.slope_max - e,
        p.v_end_min + e,
        p.v_end_max - e,
        p.j0_max - e,
        p.t_min + e,
        p.t_max - e,
    )


def solve_outflow(p: OutflowProblem) -> SolveResult:
    """Minimize the terminal jerk magnitude of the acceleration profile into the minor street."""
    if p.v_start >= p.v_end_max - BOUND_SHRINK:
        return SolveResult(feasible=False)
    e = BOUND_SHRINK
    return _solve_reduced(
        p.v_start,
        -1.0,
        -p.slope_max - e,  # magnitude bounds: |slope| in (0.2, 0.6)
        -p.slope_min - e,
        max(p.v_end_min, p.v_start) + e,
        p.v_end_max - e,
        p.j0_max - e,
        p.t_min + e,
        p.t_max - e,
    )


def base_av_times(d_in: float, v_max: float, v_in: float, a_in: float) -> tuple[float, float]:
    """Ramp and cruise durations of the corridor schedule for given decisions."""
    ramp = (v_max - v_in) / a_in
    cruise = d_in / v_max - (v_max * v_max - v_in * v_in) / (2.0 * a_in * v_max)
    return ramp, cruise


def solve_base_av(p: BaseAvProblem) -> BaseAvSchedule:
    """Minimize corridor traversal time; the optimum sits at the upper corner.

    The excess over pure cruising is (v_max - v_in)^2 / (2 a_in v_max),
    decreasing in both decision variables, so the corner is optimal
    whenever it is feasible; and the cruise-time constraint is loosest
    there, so corner infeasibility implies an empty feasible set.
    """
    e = BOUND_SHRINK
    v_in = p.v_in_max - e
    a_in = p.a_in_max - e
    ramp, cruise = base_av_times(p.d_in, p.v_max, v_in, a_in)
    total = ramp + cruise
    if cruise < 0.0 or not 0.0 < total < p.t_max:
        return BaseAvSchedule(feasible=False)
    return BaseAvSchedule(feasible=True, v_in=v_in, a_in=a_in, ramp_time=ramp, cruise_time=cruise, total_time=total)


# ---------------------------------------------------------------------------
# brute-force oracles: plain uniform grids, winners validated through the
# jerk-profile kinematics (an independent route from the closed forms above)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class OracleResult:
    feasible: bool
    objective: float = math.inf
    point: dict = field(default_factory=dict)


def _oracle_reduced(v_start, dv_sign, mag_lo, mag_hi, v_lo, v_hi, j0_cap, t_lo, t_hi, n) -> OracleResult:
    best = _grid_best(v_start, dv_sign, mag_lo, mag_hi, v_lo, v_hi, j0_cap, t_lo, t_hi, n)
    if best is None:
        return OracleResult(feasible=False)
    obj, mag, v_end = best
    delta_v = dv_sign * (v_start - v_end)
    duration = (12.0 * delta_v / mag) ** (1.0 / 3.0)
    slope = dv_sign * mag
    prof = JerkProfile(v_start, -slope * duration / 2.0, slope, duration)
    end = prof.sample(duration)
    tol = 1e-6
    assert abs(end.accel) <= tol, "oracle winner violates zero terminal acceleration"
    assert abs(end.speed - v_end) <= tol, "oracle winner end speed mismatch"
    assert abs(abs(end.jerk) - obj) <= tol, "oracle objective mismatch"
    return OracleResult(
        feasible=True,
        objective=obj,
        point={"jerk_slope": slope, "end_speed": v_end, "duration": duration},
    )


def oracle_inflow(p: InflowProblem, n: int = 401) -> OracleResult:
    if p.v_start <= p.v_end_max:
        return OracleResult(feasible=False)
    e = BOUND_SHRINK
    return _oracle_reduced(
        p.v_start, +1.0, p.slope_min + e, p.slope_max - e, p.v_end_min + e, p.v_end_max - e,
        p.j0_max - e, p.t_min + e, p.t_max - e, n,
    )


def oracle_outflow(p: OutflowProblem, n: int = 401) -> OracleResult:
    if p.v_start >= p.v_end_max - BOUND_SHRINK:
        return OracleResult(feasible=False)
    e = BOUND_SHRINK
    return _oracle_reduced(
        p.v_start, -1.0, -p.slope_max - e, -p.slope_min - e, max(p.v_end_min, p.v_start) + e,
        p.v_end_max - e, p.j0_max - e, p.t_min + e, p.t_max - e, n,
    )


def oracle_base_av(p: BaseAvProblem, n: int = 401) -> OracleResult:
    e = BOUND_SHRINK
    v_ins = np.linspace(p.v_in_min + e, p.v_in_max - e, n)
    a_ins = np.linspace(p.a_in_min + e, p.a_in_max - e, n)
    v, a = np.meshgrid(v_ins, a_ins, indexing="ij")
    ramp = (p.v_max - v) / a
    cruise = p.d_in / p.v_max - (p.v_max * p.v_max - v * v) / (2.0 * a * p.v_max)
    total = ramp + cruise
    feas = (cruise >= 0.0) & (total > 0.0) & (total < p.t_max)
    if not feas.any():
        return OracleResult(feasible=False)
    masked = np.where(feas, total, np.inf)
    idx = int(np.argmin(masked))
    i, k = divmod(idx, n)
    return OracleResult(
        feasible=True,
        objective=float(masked.flat[idx]),
        point={"v_in": float(v_ins[i]), "a_in": float(a_ins[k])},
    )
