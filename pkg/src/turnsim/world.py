"""Time-stepped intersection world: opposing traffic, the follower model, and detection.

One World instance owns one run.  All randomness is consumed up front
when the opposing arrival schedules are drawn, so stepping is fully
deterministic; replaying a (config, seed) pair reproduces trajectories
and the event log bit for bit.
"""

from __future__ import annotations

import math

import numpy as np

from .config import FOLLOWER_AGGRESSIVE, FOLLOWER_CALM, FOLLOWER_NONE, IdmConfig, ScenarioConfig
from .gaps import FAR, NEAR, OpposingObservation, OpposingSnapshot
from .geometry import IntersectionLayout, conflict_clearances, path_station_of_conflicts

ROLE_SUBJECT = "subject"
ROLE_FOLLOWER = "follower"
ROLE_OPPOSING = "opposing"

PERMISSIVE_GREEN = "permissive_green"

LANE_SUBJECT = "major_dir1_lane1"
LANE_OPP_NEAR = "major_dir2_lane1"
LANE_OPP_FAR = "major_dir2_lane2"

ROUTE_MAJOR = "major"
ROUTE_TURN = "turn"

_OPP_LANE_NAME = {NEAR: LANE_OPP_NEAR, FAR: LANE_OPP_FAR}


class SignalState:
    """The shared-lane phase is held at permissive green for the whole experiment:
    left turns are allowed but must yield to opposing through traffic."""

    phase = PERMISSIVE_GREEN


class Vehicle:
    __slots__ = (
        "vid", "role", "lane", "x", "v", "a", "length", "width",
        "desired_speed", "spawn_time", "route", "turn_s", "want_turn", "hard_braking",
    )

    def __init__(self, vid, role, lane, x, v, length, width, desired_speed, spawn_time):
        self.vid = vid
        self.role = role
        self.lane = lane
        self.x = x  # front-bumper station on the current route
        self.v = v
        self.a = 0.0
        self.length = length
        self.width = width
        self.desired_speed = desired_speed
        self.spawn_time = spawn_time
        self.route = ROUTE_MAJOR
        self.turn_s = 0.0
        self.want_turn = False
        self.hard_braking = False

    def __repr__(self):
        return f"<Vehicle {self.vid} {self.role} x={self.x:.1f} v={self.v:.1f}>"


def spawn_opposing(rate_vphpln: float, speed_limit: float, rng, horizon: float, traffic) -> tuple:
    """Arrival times and desired speeds for one opposing lane.

    Headways are exponential with the configured floor; desired speeds a
    truncated normal centered below the limit so ~95% of draws fall in
    the 70%-110% band.
    """
    if rate_vphpln <= 0:
        raise ValueError("rate must be positive")
    mean_headway = 3600.0 / rate_vphpln
    times = []
    t = 0.0
    while t < horizon:
        t += max(traffic.min_headway, rng.exponential(mean_headway))
        times.append(t)
    mean = traffic.speed_mean_frac * speed_limit
    sd = traffic.speed_sd_frac * speed_limit
    lo = traffic.speed_lo_frac * speed_limit
    hi = traffic.speed_hi_frac * speed_limit
    speeds = []
    for _ in times:
        s = rng.normal(mean, sd)
        while not lo <= s <= hi:
            s = rng.normal(mean, sd)
        speeds.append(s)
    return times, speeds


def car_follow(gap, v_lead, v, desired_speed, p: IdmConfig) -> float:
    """Intelligent-Driver-Model acceleration command, clamped to the actuator range."""
    if gap is not None and gap < 0.0:
        return p.accel_floor
    free = (v / desired_speed) ** p.exponent if desired_speed > 0.0 else 0.0
    if gap is None:
        accel = p.max_accel * (1.0 - free)
    else:
        gap = max(gap, 1e-3)
        s_star = p.min_gap + max(
            0.0, v * p.desired_headway + v * (v - v_lead) / (2.0 * math.sqrt(p.max_accel * p.comfort_decel))
        )
        accel = p.max_accel * (1.0 - free - (s_star / gap) ** 2)
    return min(max(accel, p.accel_floor), p.max_accel)


def aggressive_follow(gap, v_lead, v, speed_limit, fcfg, dt, hard_braking):
    """Speed-limit tracking that ignores the leader until very close, then brakes hard.

    Returns (accel, hard_braking', onset) where onset marks a new braking
    episode; hysteresis on the release gap prevents chattering.
    """
    trigger = False
    if gap is not None:
        closing = v - v_lead
        if gap < fcfg.hard_brake_gap:
            trigger = True
        elif closing > 0.0 and gap / closing < fcfg.hard_brake_ttc:
            trigger = True
    if hard_braking:
        release = gap is None or (gap > fcfg.release_gap and not trigger)
        if not release:
            accel = fcfg.hard_brake_decel if v > 0.0 else 0.0
            return accel, True, False
        hard_braking = False
    if trigger:
        return (fcfg.hard_brake_decel if v > 0.0 else 0.0), True, True
    # leader ignored: launch toward the posted limit
    accel = min(fcfg.launch_accel, max(0.0, (speed_limit - v) / dt))
    return accel, False, False


class World:
    """Single-run intersection world; the subject's controller is attached after construction."""

    def __init__(self, config: ScenarioConfig, volume: float, seed: int):
        self.cfg = config
        self.volume = volume
        self.seed = seed
        self.dt = config.dt

        lay = config.layout
        self.layout = IntersectionLayout(
            lane_width=lay.lane_width,
            major_lanes_per_direction=lay.major_lanes_per_direction,
            minor_lanes=lay.minor_lanes,
            major_length=lay.major_length,
            major_speed_limit=lay.major_speed_limit,
            minor_speed_limit=lay.minor_speed_limit,
            stop_line_position=lay.stop_line_position,
        )
        self.turn_path = path_station_of_conflicts(self.layout)
        self.clearances = conflict_clearances(
            lay.lane_width,
            config.traffic.vehicle_width,
            config.conflict.edge_margin,
            config.conflict.approach_buffer,
            config.conflict.formula,
        )
        self.bar = lay.stop_line_position
        self.conflict_station = config.traffic.spawn_distance

        rng = np.random.default_rng(seed)
        horizon = config.sim_time_cap + 60.0
        self._schedule = {}
        for lane in (NEAR, FAR):
            times, speeds = spawn_opposing(volume, lay.major_speed_limit, rng, horizon, config.traffic)
            self._schedule[lane] = (times, speeds, [0])  # third item: next-index cell

        self.signal = SignalState()
        self.time = 0.0
        self._step_count = 0
        self._next_vid = 1

        self.subject = None
        self.follower = None
        self.opposing = {NEAR: [], FAR: []}
        self.scripted = []  # extra same-lane vehicles for front-interference scenarios
        self.controller = None

        self.events = []
        self.subject_trace = []   # (t, station, speed, accel)
        self.follower_trace = []
        self.collided = False
        self.same_lane_collisions = 0
        self.co_occupancy_count = 0
        self._co_occupancy_pairs = set()
        self._subject_band = {NEAR: False, FAR: False}
        self.subject_done_time = None
        self.follower_done_time = None
        self.follower_dwell = 0.0
        self._follower_launched = False
        self.timeout = False

    # ------------------------------------------------------------------
    # observation surfaces
    # ------------------------------------------------------------------

    def opposing_snapshot(self, visibility: float, extra_upstream: float = 0.0) -> OpposingSnapshot:
        """Opposing vehicles within the given range of the intersection.

        ``extra_upstream`` widens the range requirement to account for a
        sensor that sits upstream of the stop bar (front camera mid
        approach); the roadside unit uses zero.
        """
        cs = self.conflict_station
        vehicles = []
        for lane in (NEAR, FAR):
            for veh in self.opposing[lane]:
                dist = cs - veh.x
                if dist + extra_upstream > visibility:
                    continue
                vehicles.append(
                    OpposingObservation(veh.vid, lane, dist, veh.v, veh.length)
                )
        return OpposingSnapshot(timestamp=self.time, visibility_range=visibility, vehicles=tuple(vehicles))

    def rsu_snapshot(self) -> OpposingSnapshot:
        return self.opposing_snapshot(self.cfg.cav.rsu_range)

    def front_snapshot(self) -> OpposingSnapshot:
        upstream = max(0.0, self.bar - self.subject.x) if self.subject.route == ROUTE_MAJOR else 0.0
        return self.opposing_snapshot(self.cfg.cav.front_sensing_range, extra_upstream=upstream)

    def earliest_opposing_arrival(self, veh: Vehicle, lane: str) -> float:
        """Lower bound on time until the vehicle starts occupying its conflict area.

        Assumes the strongest plausible behavior: acceleration at the IDM
        maximum up to the top of the configured desired-speed band.
        """
        _, approach_clear = (
            (self.clearances.near_pass, self.clearances.near_approach)
            if lane == NEAR
            else (self.clearances.far_pass, self.clearances.far_approach)
        )
        dist = self.conflict_station - veh.x - approach_clear
        if dist <= 0.0:
            return 0.0
        v = veh.v
        a = self.cfg.traffic.idm.max_accel
        v_top = self.cfg.traffic.speed_hi_frac * self.layout.major_speed_limit
        if v >= v_top:
            return dist / v
        ramp_t = (v_top - v) / a
        ramp_d = v * ramp_t + 0.5 * a * ramp_t * ramp_t
        if ramp_d >= dist:
            return (-v + math.sqrt(v * v + 2.0 * a * dist)) / a
        return ramp_t + (dist - ramp_d) / v_top

    def subject_station(self) -> float:
        s = self.subject
        return s.x if s.route == ROUTE_MAJOR else self.bar + s.turn_s

    def add_obstacle(self, x: float, v: float = 0.0, length: float = 4.6) -> Vehicle:
        """Insert a scripted vehicle ahead of the subject in its lane (constant speed)."""
        veh = Vehicle(9000 + len(self.scripted), "obstacle", LANE_SUBJECT, x, v,
                      length, self.cfg.traffic.vehicle_width, v, self.time)
        self.scripted.append(veh)
        return veh

    def subject_leader(self):
        """(rear position, speed) of the nearest scripted vehicle ahead of the subject."""
        s = self.subject
        if s is None or s.route != ROUTE_MAJOR or not self.scripted:
            return None
        best = None
        for o in self.scripted:
            rear = o.x - o.length
            if rear >= s.x - 1e-9 and (best is None or rear < best[0]):
                best = (rear, o.v)
        return best

    def follower_leader(self):
        """(rear position, speed) of what blocks the follower's lane, or None."""
        s = self.subject
        if s is None:
            return None
        if s.route == ROUTE_MAJOR:
            return s.x - s.length, s.v
        if (s.turn_s - s.length) < self.turn_path.near_entry_station:
            # project the rear back onto the lane; path stations slightly
            # overstate along-lane progress, margins absorb the difference
            return self.bar - s.length + s.turn_s, s.v
        return None

    # ------------------------------------------------------------------
    # stepping
    # ------------------------------------------------------------------

    def _spawn_due(self):
        t = self.time
        cfg = self.cfg
        if self.subject is None and t >= 0.0:
            self.subject = Vehicle(
                0, ROLE_SUBJECT, LANE_SUBJECT, 0.0, cfg.base_av.entry_speed,
                cfg.subject.length, cfg.subject.width, self.layout.major_speed_limit, t,
            )
            self.events.append((t, "spawn", 0, ROLE_SUBJECT))
        if (
            self.follower is None
            and cfg.follower.mode != FOLLOWER_NONE
            and t >= cfg.follower.start_offset
        ):
            self.follower = Vehicle(
                -1, ROLE_FOLLOWER, LANE_SUBJECT, 0.0, 0.0,
                cfg.follower.length, cfg.follower.width, self.layout.major_speed_limit, t,
            )
            self.events.append((t, "spawn", -1, ROLE_FOLLOWER))
        for lane in (NEAR, FAR):
            times, speeds, idx_cell = self._schedule[lane]
            idx = idx_cell[0]
            vehicles = self.opposing[lane]
            while idx < len(times) and times[idx] <= t:
                desired = speeds[idx]
                if vehicles:
                    tail = vehicles[-1]
                    gap = tail.x - tail.length - 0.0
                    if gap < desired * 1.0 + 2.0:
                        break  # entry blocked; retry next step, order preserved
                veh = Vehicle(
                    self._next_vid, ROLE_OPPOSING, _OPP_LANE_NAME[lane], 0.0, desired,
                    cfg.traffic.vehicle_length, cfg.traffic.vehicle_width, desired, t,
                )
                self._next_vid += 1
                vehicles.append(veh)
                self.events.append((t, "spawn", veh.vid, lane))
                idx += 1
            idx_cell[0] = idx

    def _despawn_opposing(self):
        limit = self.conflict_station + self.cfg.traffic.despawn_past
        for lane in (NEAR, FAR):
            vehicles = self.opposing[lane]
            while vehicles and vehicles[0].x - vehicles[0].length > limit:
                vehicles.pop(0)

    def _opposing_accels(self):
        idm = self.cfg.traffic.idm
        for lane in (NEAR, FAR):
            vehicles = self.opposing[lane]
            for i, veh in enumerate(vehicles):
                if i == 0:
                    veh.a = car_follow(None, 0.0, veh.v, veh.desired_speed, idm)
                else:
                    lead = vehicles[i - 1]
                    gap = lead.x - lead.length - veh.x
                    veh.a = car_follow(gap, lead.v, veh.v, veh.desired_speed, idm)

    def _follower_accel(self):
        f = self.follower
        cfg = self.cfg
        leader = self.follower_leader()
        if leader is None:
            gap, v_lead = None, 0.0
        else:
            rear, v_lead = leader
            gap = rear - f.x
        if cfg.follower.mode == FOLLOWER_AGGRESSIVE:
            accel, braking, onset = aggressive_follow(
                gap, v_lead, f.v, self.layout.major_speed_limit, cfg.follower, self.dt, f.hard_braking
            )
            f.hard_braking = braking
            if onset:
                self.events.append((self.time, "hard_brake_onset", f.vid, round(gap, 3) if gap is not None else None))
            f.a = accel
        else:
            f.a = car_follow(gap, v_lead, f.v, self.layout.major_speed_limit, cfg.traffic.idm)

    def _integrate(self, veh: Vehicle):
        dt = self.dt
        v_new = veh.v + veh.a * dt
        if v_new < 0.0:
            v_new = 0.0
        realized = (v_new - veh.v) / dt
        veh.v = v_new
        if veh.route == ROUTE_TURN:
            veh.turn_s += v_new * dt
        else:
            veh.x += v_new * dt
        return realized

    def _check_subject_bands(self):
        s = self.subject
        path = self.turn_path
        bands = (
            (NEAR, path.near_entry_station, path.near_exit_station),
            (FAR, path.far_entry_station, path.far_exit_station),
        )
        for lane, lo, hi in bands:
            inside = s.route == ROUTE_TURN and s.turn_s > lo and (s.turn_s - s.length) < hi
            if inside and not self._subject_band[lane]:
                self.events.append((self.time, "conflict_entry", s.vid, lane))
            elif not inside and self._subject_band[lane]:
                self.events.append((self.time, "conflict_exit", s.vid, lane))
            self._subject_band[lane] = inside
            if inside:
                cs = self.conflict_station
                half = path.zone_half_length + 0.5 * s.width
                for veh in self.opposing[lane]:
                    if veh.x > cs - half and veh.x - veh.length < cs + half:
                        pair = (lane, veh.vid)
                        if pair not in self._co_occupancy_pairs:
                            self._co_occupancy_pairs.add(pair)
                            self.co_occupancy_count += 1
                            self.collided = True
                            self.events.append((self.time, "collision", s.vid, ("conflict_zone", lane, veh.vid)))

    def _check_same_lane(self):
        for lane in (NEAR, FAR):
            vehicles = self.opposing[lane]
            for lead, tail in zip(vehicles, vehicles[1:]):
                if tail.x > lead.x - lead.length:
                    self.same_lane_collisions += 1
                    self.collided = True
                    self.events.append((self.time, "collision", tail.vid, ("same_lane", lead.vid)))
        f = self.follower
        if f is not None:
            leader = self.follower_leader()
            if leader is not None and f.x > leader[0]:
                self.same_lane_collisions += 1
                self.collided = True
                self.events.append((self.time, "collision", f.vid, ("same_lane", self.subject.vid)))
        s = self.subject
        if s is not None and s.route == ROUTE_MAJOR:
            lead = self.subject_leader()
            if lead is not None and s.x > lead[0]:
                self.same_lane_collisions += 1
                self.collided = True
                self.events.append((self.time, "collision", s.vid, ("same_lane", "obstacle")))

    def step(self):
        """Advance the world by one time step."""
        self._spawn_due()
        dt = self.dt

        if self.subject is not None:
            if self.subject_done_time is None:
                self.subject.a = self.controller.command(self) if self.controller is not None else 0.0
            else:
                self.subject.a = 0.0
        if self.follower is not None:
            if self.follower_done_time is None:
                self._follower_accel()
            else:
                self.follower.a = 0.0
        self._opposing_accels()

        subject_was_done = self.subject_done_time is not None
        follower_was_done = self.follower_done_time is not None
        realized_subject = 0.0
        if self.subject is not None:
            s = self.subject
            realized_subject = self._integrate(s)
            if s.route == ROUTE_MAJOR and s.want_turn and s.x >= self.bar:
                s.route = ROUTE_TURN
                s.turn_s = s.x - self.bar
                s.x = self.bar
                self.events.append((self.time, "turn_start", s.vid, round(self.time, 3)))
        realized_follower = 0.0
        if self.follower is not None:
            realized_follower = self._integrate(self.follower)
        for lane in (NEAR, FAR):
            for veh in self.opposing[lane]:
                self._integrate(veh)
        for veh in self.scripted:
            veh.a = 0.0
            self._integrate(veh)

        self.time = round((self._step_count + 1) * dt, 9)
        self._step_count += 1
        t_now = self.time

        if self.subject is not None and not subject_was_done:
            self.subject_trace.append((t_now, self.subject_station(), self.subject.v, realized_subject))
            if (
                self.subject.route == ROUTE_TURN
                and self.subject.turn_s >= self.turn_path.total_arc_length
            ):
                self.subject_done_time = t_now
                self.events.append((t_now, "arrival", self.subject.vid, ROLE_SUBJECT))
        if self.follower is not None and not follower_was_done:
            f = self.follower
            self.follower_trace.append((t_now, f.x, f.v, realized_follower))
            if self.follower_done_time is None:
                if f.v > 1.0:
                    self._follower_launched = True
                if f.v < 0.3 and self._follower_launched:
                    self.follower_dwell += dt
                if f.x >= self.bar + f.length:
                    self.follower_done_time = t_now
                    self.events.append((t_now, "arrival", f.vid, ROLE_FOLLOWER))

        if self.subject is not None:
            self._check_subject_bands()
        self._check_same_lane()
        self._despawn_opposing()

    def finished(self) -> bool:
        if self.time >= self.cfg.sim_time_cap:
            self.timeout = self.subject_done_time is None or (
                self.cfg.follower.mode != FOLLOWER_NONE and self.follower_done_time is None
            )
            return True
        subject_ok = self.subject_done_time is not None
        follower_ok = self.cfg.follower.mode == FOLLOWER_NONE or self.follower_done_time is not None
        if subject_ok and follower_ok:
            return self.time >= max(
                self.subject_done_time or 0.0,
                self.follower_done_time or 0.0,
            ) + 1.0
        return False

    def run(self):
        while not self.finished():
            self.step()
        return self
