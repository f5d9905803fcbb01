import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from turnsim.profile import JerkProfile, min_trapezoid_time, trapezoid_approach


class TestJerkProfileEval:
    def test_uniform_motion(self):
        p = JerkProfile(start_speed=5.0, start_jerk=0.0, jerk_slope=0.0, duration=10.0)
        s = p.sample(3.0)
        assert s.jerk == 0.0
        assert s.accel == 0.0
        assert s.speed == 5.0
        assert s.distance == 15.0

    def test_inflow_optimum_sample(self):
        # deceleration segment ending at ~2.5 m/s with zero terminal accel
        T = (12.0 * (13.4 - 2.5) / 0.1) ** (1.0 / 3.0)
        p = JerkProfile(start_speed=13.4, start_jerk=-0.1 * T / 2.0, jerk_slope=0.1, duration=T)
        end = p.sample(T)
        assert abs(end.accel) <= 1e-6
        assert end.speed == pytest.approx(2.5, abs=0.01)
        assert end.distance == pytest.approx(13.4 * T - 0.1 * T ** 4 / 24.0, rel=1e-12)
        assert end.distance == pytest.approx(86.9, abs=0.1)

    def test_rejects_time_outside_domain(self):
        p = JerkProfile(1.0, 0.0, 0.0, 2.0)
        with pytest.raises(ValueError):
            p.sample(-0.5)
        with pytest.raises(ValueError):
            p.sample(2.5)

    def test_rejects_non_positive_duration(self):
        with pytest.raises(ValueError):
            JerkProfile(1.0, 0.0, 0.0, 0.0)

    def test_finite_difference_chain(self):
        # d' = v, v' = a, a' = J at 100 random (profile, t) samples
        rng = np.random.default_rng(123)
        h = 1e-4
        for _ in range(100):
            p = JerkProfile(
                start_speed=rng.uniform(0.0, 20.0),
                start_jerk=rng.uniform(-1.5, 1.5),
                jerk_slope=rng.uniform(-0.8, 0.8),
                duration=rng.uniform(1.0, 30.0),
            )
            t = rng.uniform(h, p.duration - h)
            lo, mid, hi = p.sample(t - h), p.sample(t), p.sample(t + h)
            assert (hi.distance - lo.distance) / (2 * h) == pytest.approx(mid.speed, abs=1e-5)
            assert (hi.speed - lo.speed) / (2 * h) == pytest.approx(mid.accel, abs=1e-5)
            assert (hi.accel - lo.accel) / (2 * h) == pytest.approx(mid.jerk, abs=1e-5)

    @given(
        v0=st.floats(min_value=0.0, max_value=25.0),
        j=st.floats(min_value=0.01, max_value=0.8),
        T=st.floats(min_value=0.5, max_value=40.0),
    )
    @settings(max_examples=200, deadline=None)
    def test_zero_terminal_accel_identities(self, v0, j, T):
        # with start_jerk = -j*T/2 the terminal accel vanishes and the
        # terminal speed / distance collapse to cubic and quartic identities
        p = JerkProfile(start_speed=v0, start_jerk=-j * T / 2.0, jerk_slope=j, duration=T)
        end = p.sample(T)
        assert abs(end.accel) <= 1e-9 * max(1.0, j * T * T)
        assert end.speed == pytest.approx(v0 - j * T ** 3 / 12.0, abs=1e-9 * max(1.0, j * T ** 3))
        assert end.distance == pytest.approx(v0 * T - j * T ** 4 / 24.0, rel=1e-9, abs=1e-9)


class TestTrapezoidApproach:
    def test_pure_cruise(self):
        plan = trapezoid_approach(100.0, 100.0 / 13.4, 13.4, 15.64)
        assert plan.feasible
        assert plan.peak_speed == pytest.approx(13.4)
        assert plan.ramp_time == pytest.approx(0.0)
        assert plan.distance_at(plan.duration) == pytest.approx(100.0, abs=0.01)

    def test_speed_up_case_against_quadratic_oracle(self):
        d, t_avail, v0, cap, r = 100.0, 7.0, 13.4, 15.64, 1.0
        plan = trapezoid_approach(d, t_avail, v0, cap, ramp_accel=r)
        assert plan.feasible
        assert plan.desired_speed == pytest.approx(d / t_avail)
        # area-balance quadratic: x^2 - r T x + r (d - v0 T) = 0, smaller root
        x = 0.5 * (r * t_avail - math.sqrt(r * r * t_avail ** 2 - 4.0 * r * (d - v0 * t_avail)))
        assert plan.peak_speed == pytest.approx(v0 + x, rel=1e-9)
        assert plan.peak_speed <= cap
        assert plan.distance_at(plan.duration) == pytest.approx(d, abs=0.01)
        assert plan.duration == pytest.approx(t_avail, abs=0.01)

    def test_cap_violation_flags_infeasible(self):
        plan = trapezoid_approach(200.0, 10.0, 13.4, 15.64)
        assert not plan.feasible
        assert plan.desired_speed == pytest.approx(20.0)
        assert plan.peak_speed <= 15.64 + 1e-9

    def test_slow_down_case(self):
        # extra time: dip below the entry speed and come back
        plan = trapezoid_approach(124.0, 10.0, 13.4, 15.64)
        assert plan.feasible
        assert plan.peak_speed < 13.4
        assert plan.distance_at(plan.duration) == pytest.approx(124.0, abs=0.01)
        assert plan.speed_at(plan.duration - 1e-9) == pytest.approx(13.4, abs=1e-3)

    def test_unreachable_slow_target_flags_infeasible(self):
        # from 13.4 m/s with 1 m/s^2 ramps the deepest 12 s dip covers > 100 m
        plan = trapezoid_approach(100.0, 12.0, 13.4, 15.64)
        assert not plan.feasible

    def test_distance_integral_matches_over_random_feasible_plans(self):
        rng = np.random.default_rng(7)
        checked = 0
        while checked < 60:
            v0 = rng.uniform(2.0, 15.0)
            cap = v0 + rng.uniform(0.5, 5.0)
            d = rng.uniform(20.0, 300.0)
            t_avail = d / v0 * rng.uniform(0.85, 1.3)
            plan = trapezoid_approach(d, t_avail, v0, cap)
            if not plan.feasible:
                continue
            checked += 1
            assert plan.distance_at(plan.duration) == pytest.approx(d, abs=0.01)
            assert plan.duration == pytest.approx(t_avail, abs=0.01)
            assert plan.max_speed <= cap + 1e-9
            # numeric integral of speed_at equals the closed-form distance
            ts = np.linspace(0.0, plan.duration, 2001)
            speeds = np.array([plan.speed_at(float(t)) for t in ts])
            integral = np.trapezoid(speeds, ts)
            assert integral == pytest.approx(d, abs=0.05)

    def test_rejects_entry_speed_over_cap(self):
        with pytest.raises(ValueError):
            trapezoid_approach(100.0, 10.0, 16.0, 15.64)

    def test_rejects_non_positive_inputs(self):
        with pytest.raises(ValueError):
            trapezoid_approach(0.0, 5.0, 10.0, 15.0)
        with pytest.raises(ValueError):
            trapezoid_approach(10.0, 0.0, 10.0, 15.0)


class TestMinTrapezoidTime:
    def test_matches_trapezoid_feasibility_boundary(self):
        v0, cap = 13.4, 15.64
        d = 150.0
        t_min = min_trapezoid_time(d, v0, cap)
        fast = trapezoid_approach(d, t_min + 0.01, v0, cap)
        assert fast.feasible
        too_fast = trapezoid_approach(d, t_min - 0.05, v0, cap)
        assert not too_fast.feasible

    def test_already_at_cap(self):
        assert min_trapezoid_time(100.0, 10.0, 10.0) == pytest.approx(10.0)
