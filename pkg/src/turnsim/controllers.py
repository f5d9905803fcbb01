"""The three longitudinal policies for the subject vehicle.

base_av_1: follow the posted limit, brake comfortably to the stop bar,
turn on a 5-second onboard gap.  base_av_2: same bar behavior but the
corridor approach is scheduled for minimum travel time.  situation_aware:
behaves exactly like base_av_2 until the rear camera classifies the
follower as aggressive, then times its arrival at the stop bar into a
predicted gap using the roadside-unit feed, decelerating along a
jerk-minimal profile and turning along another.
"""

from __future__ import annotations

from .config import BASE_AV_1, BASE_AV_2, SITUATION_AWARE, ScenarioConfig
from .gaps import (
    FAR,
    NEAR,
    complement_intervals,
    earliest_launch,
    lane_clearances,
    lane_occupancies,
    launch_slots,
    occupancy_interval,
)
from .intent import (
    FollowerObservation,
    Intent,
    IntentModelParams,
    follower_kinematics,
    intent_probability,
)
from .optimizer import (
    BaseAvProblem,
    InflowProblem,
    OutflowProblem,
    solve_base_av,
    solve_inflow,
    solve_outflow,
    stopping_distance,
)
from .profile import min_trapezoid_time, trapezoid_approach
from .world import ROUTE_MAJOR, ROUTE_TURN, World, car_follow

STOP_OFFSET = 0.3  # stop with the front bumper this far before the bar
STOP_SPEED = 0.05


def _toward(v_target: float, v: float, accel: float, dt: float) -> float:
    """Accelerate toward a target speed without overshooting in one step."""
    if v >= v_target:
        return min(0.0, (v_target - v) / dt)
    return min(accel, (v_target - v) / dt)


def _stop_tracking_accel(v: float, remaining: float, floor: float) -> float:
    if remaining <= 0.05 or v <= 0.0:
        return floor if v > 0.0 else 0.0
    return max(-v * v / (2.0 * remaining), floor)


def _safety_envelope(world: World, accel: float) -> float:
    """Never command into a slower leader: IDM bound against anything ahead."""
    leader = world.subject_leader()
    if leader is None:
        return accel
    s = world.subject
    gap = leader[0] - s.x
    bound = car_follow(gap, leader[1], s.v, world.layout.major_speed_limit, world.cfg.traffic.idm)
    return min(accel, bound)


def bar_gap_ok(world: World, min_gap_s: float) -> bool:
    """Onboard constant-speed rule: no predicted conflict arrival sooner than min_gap_s.

    A vehicle currently inside a conflict area has arrival time zero and
    blocks; both opposing lanes must pass.
    """
    snap = world.front_snapshot()
    clear = world.clearances
    for veh in snap.vehicles:
        pass_clear, approach_clear = lane_clearances(clear, veh.lane)
        occ = occupancy_interval(veh.distance_to_conflict, veh.speed, veh.length, pass_clear, approach_clear)
        if occ is not None and occ[0] < min_gap_s:
            return False
    return True


class _TurnExecutor:
    """Fixed comfortable turn for the base policies: constant accel up to the turn speed."""

    def __init__(self, accel: float, speed: float):
        self.accel = accel
        self.speed = speed

    def command(self, v: float, dt: float) -> float:
        return _toward(self.speed, v, self.accel, dt)

    def distance_at(self, tau: float) -> float:
        ramp_t = self.speed / self.accel
        if tau <= ramp_t:
            return 0.5 * self.accel * tau * tau
        return 0.5 * self.accel * ramp_t * ramp_t + self.speed * (tau - ramp_t)


def crossing_offsets(distance_at, subject_length: float, turn_path) -> dict:
    """Per-lane (enter, exit) time offsets of the subject's conflict occupancy.

    Measured from the launch instant at the stop bar: entry when the front
    bumper reaches the band, exit when the rear clears it.
    """

    def time_to(target: float) -> float:
        lo, hi = 0.0, 1.0
        while distance_at(hi) < target:
            hi *= 2.0
            if hi > 600.0:
                raise ValueError("turn plan never covers the conflict distance")
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            if distance_at(mid) < target:
                lo = mid
            else:
                hi = mid
        return 0.5 * (lo + hi)

    return {
        NEAR: (
            time_to(turn_path.near_entry_station),
            time_to(turn_path.near_exit_station + subject_length),
        ),
        FAR: (
            time_to(turn_path.far_entry_station),
            time_to(turn_path.far_exit_station + subject_length),
        ),
    }


class BaseAv1Controller:
    """Posted-limit cruising, comfortable braking to the bar, 5 s onboard gap rule."""

    kind = BASE_AV_1

    def __init__(self, config: ScenarioConfig):
        self.cfg = config
        self.phase = "cruise"
        self.turn = _TurnExecutor(config.base_av.turn_accel, config.base_av.turn_speed)

    def _note(self, world, text):
        world.events.append((world.time, "decision", 0, text))

    def command(self, world: World) -> float:
        s = world.subject
        cfg = self.cfg.base_av
        dt = world.dt
        limit = world.layout.major_speed_limit

        if s.route == ROUTE_TURN:
            return self.turn.command(s.v, dt)

        remaining = world.bar - STOP_OFFSET - s.x
        if self.phase == "cruise":
            if remaining <= s.v * s.v / (2.0 * cfg.comfort_decel):
                self.phase = "brake"
                self._note(world, "phase:brake")
            else:
                a = _toward(limit, s.v, cfg.comfort_accel, dt)
                return _safety_envelope(world, a)
        if self.phase == "brake":
            if s.v <= STOP_SPEED and remaining < 3.0:
                self.phase = "wait"
                self._note(world, "phase:wait_at_bar")
            else:
                return _safety_envelope(world, _stop_tracking_accel(s.v, remaining, -3.0))
        if self.phase == "wait":
            if bar_gap_ok(world, cfg.gap_rule_s):
                s.want_turn = True
                self.phase = "turn"
                self._note(world, "decision:turn")
                return self.turn.command(s.v, dt)
            return -s.v / dt if s.v > 0.0 else 0.0
        if self.phase == "turn":
            return self.turn.command(s.v, dt)
        return 0.0


class BaseAv2Controller:
    """Travel-time-scheduled corridor approach with the same bar behavior as base #1."""

    kind = BASE_AV_2

    def __init__(self, config: ScenarioConfig):
        self.cfg = config
        self.phase = "enter"
        self.schedule = None
        self.d_stop = None
        self.react_until = None
        self.turn = _TurnExecutor(config.base_av.turn_accel, config.base_av.turn_speed)
        self.fallback = None

    def _note(self, world, text):
        world.events.append((world.time, "decision", 0, text))

    def _plan(self, world: World):
        cfg = self.cfg.base_av
        limit = world.layout.major_speed_limit
        self.d_stop = stopping_distance(limit, cfg.reaction_time, cfg.brake_decel)
        d_in = world.bar - self.d_stop - world.subject.x
        problem = BaseAvProblem(
            d_in=d_in,
            v_max=limit,
            v_in_min=cfg.v_in_min,
            v_in_max=cfg.v_in_max,
            a_in_min=cfg.a_in_min,
            a_in_max=cfg.a_in_max,
            t_max=cfg.t_max,
        )
        self.schedule = solve_base_av(problem)
        if not self.schedule.feasible:
            self.fallback = BaseAv1Controller(self.cfg)
            self._note(world, "schedule_infeasible:fallback_base_av_1")
        else:
            self._note(world, f"schedule:v_in={self.schedule.v_in:.3f},a_in={self.schedule.a_in:.3f}")

    def command(self, world: World) -> float:
        s = world.subject
        cfg = self.cfg.base_av
        dt = world.dt
        limit = world.layout.major_speed_limit

        if self.phase == "enter":
            self._plan(world)
            self.phase = "run" if self.fallback is None else "fallback"
        if self.fallback is not None:
            return self.fallback.command(world)

        if s.route == ROUTE_TURN:
            return self.turn.command(s.v, dt)

        remaining = world.bar - STOP_OFFSET - s.x
        if self.phase == "run":
            if s.x >= world.bar - self.d_stop:
                self.phase = "react"
                self.react_until = world.time + cfg.reaction_time
                self._note(world, "phase:react")
            else:
                a = _toward(limit, s.v, self.schedule.a_in, dt)
                return _safety_envelope(world, a)
        if self.phase == "react":
            if world.time >= self.react_until:
                self.phase = "brake"
                self._note(world, "phase:brake")
            else:
                return _safety_envelope(world, _toward(limit, s.v, 0.0, dt))
        if self.phase == "brake":
            if s.v <= STOP_SPEED and remaining < 3.0:
                self.phase = "wait"
                self._note(world, "phase:wait_at_bar")
            else:
                return _safety_envelope(world, _stop_tracking_accel(s.v, remaining, -2.5))
        if self.phase == "wait":
            if bar_gap_ok(world, cfg.gap_rule_s):
                world.subject.want_turn = True
                self.phase = "turn"
                self._note(world, "decision:turn")
                return self.turn.command(s.v, dt)
            return -s.v / dt if s.v > 0.0 else 0.0
        if self.phase == "turn":
            return self.turn.command(s.v, dt)
        return 0.0


class SituationAwareController:
    """Rear-intent-aware pipeline over a base #2 fallback.

    Once the follower is classified aggressive the controller predicts
    per-lane conflict occupancy from the roadside feed, picks the earliest
    launch instant whose crossing schedule fits the predicted clear
    intervals, shapes a trapezoidal speed adjustment so the jerk-minimal
    deceleration ends at the stop bar exactly at that instant, re-verifies
    with onboard sensing, and turns along the jerk-minimal outflow.
    """

    kind = SITUATION_AWARE

    def __init__(self, config: ScenarioConfig):
        self.cfg = config
        self.base2 = BaseAv2Controller(config)
        self.intent_params = IntentModelParams(
            accel_mean_aggressive=config.intent.accel_mean_aggressive,
            accel_mean_calm=config.intent.accel_mean_calm,
            accel_sd=config.intent.accel_sd,
            headway_mean_aggressive=config.intent.headway_mean_aggressive,
            headway_mean_calm=config.intent.headway_mean_calm,
            headway_sd=config.intent.headway_sd,
            prior_aggressive=config.intent.prior_aggressive,
            prior_calm=config.intent.prior_calm,
            classify_threshold=config.intent.classify_threshold,
            speed_floor=config.intent.speed_floor,
        )
        self.activated = False
        self.samples = []
        self.estimate = None
        self.next_estimate_log = 0.0
        self.phase = "approach"
        self.plan = None
        self.next_replan = 0.0
        self.launch_time = None
        self.active_outflow = None
        self.outflow_from_stop = None

    def _note(self, world, text):
        world.events.append((world.time, "decision", 0, text))

    # -- rear sensing -------------------------------------------------

    def _sense(self, world: World):
        s, f = world.subject, world.follower
        if f is None or s.route != ROUTE_MAJOR:
            return
        gap = s.x - s.length - f.x
        if gap < 0.0 or gap > self.cfg.cav.rear_camera_range:
            return
        self.samples.append((world.time, s.x, gap))
        if len(self.samples) < 3:
            return
        obs = FollowerObservation.from_samples(self.samples[-3:])
        kin = follower_kinematics(obs, self.intent_params.speed_floor)
        self.estimate = intent_probability(kin, self.intent_params)
        if world.time >= self.next_estimate_log:
            self.next_estimate_log = world.time + 0.5
            self._note(world, f"intent_p:{self.estimate.p_aggressive:.3f}")
        if not self.activated and self.estimate.classification is Intent.AGGRESSIVE:
            self.activated = True
            self._note(world, f"intent:aggressive,p={self.estimate.p_aggressive:.3f}")

    # -- gap machinery ------------------------------------------------

    def _outflow_offsets(self, world: World, v_start: float):
        result = solve_outflow(self._outflow_problem(v_start))
        if not result.feasible:
            return None
        prof = result.profile(v_start)

        def distance_at(tau: float) -> float:
            if tau <= prof.duration:
                return prof.sample(tau).distance
            end = prof.sample(prof.duration)
            return end.distance + end.speed * (tau - prof.duration)

        offsets = crossing_offsets(distance_at, world.subject.length, world.turn_path)
        return prof, offsets

    def _outflow_problem(self, v_start: float) -> OutflowProblem:
        o = self.cfg.outflow
        return OutflowProblem(
            v_start=v_start,
            v_end_min=o.v_end_min, v_end_max=o.v_end_max,
            j0_min=o.j0_min, j0_max=o.j0_max,
            slope_min=o.slope_min, slope_max=o.slope_max,
            t_min=o.t_min, t_max=o.t_max,
        )

    def _inflow_problem(self, v_start: float) -> InflowProblem:
        i = self.cfg.inflow
        return InflowProblem(
            v_start=v_start,
            v_end_min=i.v_end_min, v_end_max=i.v_end_max,
            j0_min=i.j0_min, j0_max=i.j0_max,
            slope_min=i.slope_min, slope_max=i.slope_max,
            t_max=i.t_max,
        )

    def _go_check(self, world: World, offsets: dict, launch_delay: float) -> bool:
        """Onboard confirmation of the crossing window.

        Every visible opposing vehicle's constant-speed occupancy interval
        must miss the subject's per-lane occupancy window, margins added
        on both sides.  Near the intersection opposing vehicles hold or
        lose speed (car-following never hastens them), so at this short
        horizon the constant-speed bound plus the margin is the binding
        test.
        """
        snap = world.front_snapshot()
        margin = self.cfg.cav.safety_margin
        clear = world.clearances
        for obs in snap.vehicles:
            enter, exit_ = offsets[obs.lane]
            w_start = launch_delay + enter - margin
            w_end = launch_delay + exit_ + margin
            pass_clear, approach_clear = lane_clearances(clear, obs.lane)
            occ = occupancy_interval(obs.distance_to_conflict, obs.speed, obs.length, pass_clear, approach_clear)
            if occ is None:
                continue
            if occ[1] <= w_start or occ[0] >= w_end:
                continue
            return False
        return True

    def _try_plan(self, world: World):
        s = world.subject
        now = world.time
        cav = self.cfg.cav
        limit = world.layout.major_speed_limit
        v_cap = limit + cav.speed_margin

        if s.v <= self.cfg.inflow.v_end_max + 0.2:
            return None
        inflow = solve_inflow(self._inflow_problem(s.v))
        if not inflow.feasible:
            return None
        out = self._outflow_offsets(world, inflow.end_speed)
        if out is None:
            return None
        outflow, offsets = out
        inflow_dist = inflow.profile(s.v).end_distance
        # semi-implicit Euler undershoots a decelerating profile by
        # dt/2 * dv; stretch the adjust leg so the bar is reached on time
        euler_drift = 0.5 * world.dt * (s.v - inflow.end_speed)
        trap_dist = (world.bar - s.x) - inflow_dist + euler_drift
        if trap_dist < 2.0:
            return None

        occ = lane_occupancies(world.rsu_snapshot(), world.clearances)
        lane_clear = {
            lane: complement_intervals([(a, b + cav.plan_pass_slack) for a, b in occ[lane]])
            for lane in (NEAR, FAR)
        }
        slots = launch_slots(lane_clear, offsets, cav.safety_margin)
        not_before = now + min_trapezoid_time(trap_dist, s.v, v_cap, cav.trapezoid_accel) + inflow.duration
        launch = earliest_launch(slots, not_before)
        if launch is None or launch > now + cav.plan_horizon:
            return None
        trap = trapezoid_approach(
            trap_dist, launch - inflow.duration - now, s.v, v_cap, cav.trapezoid_accel
        )
        if not trap.feasible:
            return None
        return {
            "t0": now,
            "trap": trap,
            "inflow": inflow,
            "inflow_profile": inflow.profile(s.v),
            "inflow_start": now + trap.duration,
            "outflow": outflow,
            "offsets": offsets,
            "launch": launch,
        }

    # -- main command ---------------------------------------------------

    def command(self, world: World) -> float:
        self._sense(world)
        if not self.activated:
            return self.base2.command(world)
        a = self._sa_command(world)
        s = world.subject
        cap = world.layout.major_speed_limit + self.cfg.cav.speed_margin
        if s.route == ROUTE_MAJOR:
            a = min(a, (cap - s.v) / world.dt)
        return _safety_envelope(world, a)

    def _grant_launch(self, world: World, outflow):
        world.subject.want_turn = True
        self.launch_time = world.time
        self.active_outflow = outflow
        self.phase = "turn"
        self._note(world, "decision:turn")

    def _sa_command(self, world: World) -> float:
        s = world.subject
        t = world.time
        dt = world.dt
        cav = self.cfg.cav
        limit = world.layout.major_speed_limit

        if s.route == ROUTE_TURN:
            if self.launch_time is None:
                self.launch_time = t
            tau = t - self.launch_time
            prof = self.active_outflow
            if prof is None or tau > prof.duration:
                return 0.0
            return prof.sample(tau).accel

        remaining = world.bar - STOP_OFFSET - s.x

        if self.phase == "approach":
            if t >= self.next_replan:
                self.next_replan = t + cav.replan_period
                plan = self._try_plan(world)
                if plan is not None:
                    self.plan = plan
                    self.phase = "adjust"
                    inflow = plan["inflow"]
                    self._note(world, f"plan:launch={plan['launch']:.2f}")
                    self._note(
                        world,
                        f"profiles:inflow(j={inflow.jerk_slope:.3f};J0={inflow.start_jerk:.3f};"
                        f"vT={inflow.end_speed:.2f};T={inflow.duration:.2f})"
                        f";outflow(v0={plan['outflow'].start_speed:.2f};T={plan['outflow'].duration:.2f})",
                    )
                    return self.plan["trap"].accel_at(0.0)
            if remaining <= s.v * s.v / (2.0 * 1.5) + 0.5:
                self.phase = "stopping"
                self._note(world, "phase:stopping")
                return _stop_tracking_accel(s.v, remaining, -2.5)
            return _toward(limit, s.v, 1.0, dt)

        if self.phase == "adjust":
            plan = self.plan
            if t >= plan["inflow_start"] - 1e-9:
                self.phase = "inflow"
                self._note(world, "phase:inflow")
                return plan["inflow_profile"].sample(0.0).accel
            if t >= self.next_replan and t < plan["inflow_start"] - 0.3:
                self.next_replan = t + cav.replan_period
                fresh = self._try_plan(world)
                if fresh is not None:
                    if abs(fresh["launch"] - plan["launch"]) > 0.05:
                        self._note(world, f"replan:launch={fresh['launch']:.2f}")
                    self.plan = fresh
                    return fresh["trap"].accel_at(0.0)
            return plan["trap"].accel_at(t - plan["t0"])

        if self.phase == "inflow":
            plan = self.plan
            tau = t - plan["inflow_start"]
            prof = plan["inflow_profile"]
            near_bar = remaining <= s.v * s.v / (2.0 * 1.8) + 0.6
            if near_bar:
                # gate against the physical arrival moment, not the plan
                # clock: integration drift must not eat the safety margin
                launch_delay = max(0.0, world.bar - s.x) / max(s.v, 0.5)
                if self._go_check(world, plan["offsets"], launch_delay):
                    if remaining <= max(1.5 * s.v * dt, 0.35):
                        self._grant_launch(world, plan["outflow"])
                        return prof.sample(min(tau, prof.duration)).accel
                else:
                    self.phase = "stopping"
                    self._note(world, "recheck_failed:stopping")
                    return _stop_tracking_accel(s.v, remaining, -2.5)
            if tau <= prof.duration:
                return prof.sample(tau).accel
            return _toward(self.cfg.inflow.v_end_max, s.v, 0.3, dt)

        if self.phase == "stopping":
            if s.v <= STOP_SPEED and remaining < 3.0:
                self.phase = "wait"
                self._note(world, "phase:wait_at_bar")
                return 0.0
            return _stop_tracking_accel(s.v, remaining, -2.5)

        if self.phase == "wait":
            if self.outflow_from_stop is None:
                self.outflow_from_stop = self._outflow_offsets(world, 0.0)
            prof, offsets = self.outflow_from_stop
            if self._go_check(world, offsets, 0.0):
                self._grant_launch(world, prof)
                return prof.sample(0.0).accel
            return -s.v / dt if s.v > 0.0 else 0.0

        if self.phase == "turn":
            prof = self.active_outflow
            tau = t - self.launch_time
            if tau > prof.duration:
                return 0.0
            return prof.sample(tau).accel
        return 0.0


def make_controller(kind: str, config: ScenarioConfig):
    if kind == BASE_AV_1:
        return BaseAv1Controller(config)
    if kind == BASE_AV_2:
        return BaseAv2Controller(config)
    if kind == SITUATION_AWARE:
        return SituationAwareController(config)
    raise ValueError(f"unknown controller kind {kind!r}")
