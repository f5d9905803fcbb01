"""Acceptance suite: every exit criterion as one test, one printed verdict line each.

The Monte Carlo criteria share a single full default-suite execution
(session fixture); determinism re-executes it.  Verdict lines are written
past pytest's capture so they always appear on the terminal.
"""

import math
import time

import conftest
import numpy as np
import pytest

from turnsim.config import ScenarioConfig
from turnsim.experiments import compare, load_metrics, run_suite
from turnsim.geometry import arc_length
from turnsim.intent import FollowerKinematics, intent_probability
from turnsim.metrics import aggregate, mean
from turnsim.optimizer import (
    BaseAvProblem,
    InflowProblem,
    OutflowProblem,
    oracle_base_av,
    oracle_inflow,
    oracle_outflow,
    solve_base_av,
    solve_inflow,
    solve_outflow,
    stopping_distance,
)
from turnsim.plots import emit_plots
from turnsim.profile import JerkProfile

VOLUMES = (600, 800, 1000)
BASELINES = ("base_av_1", "base_av_2")

REFERENCE_BRAKE_REDUCTIONS = {600: 27.0, 800: 20.0, 1000: 27.0}
REFERENCE_FOLLOWER_TT_REDUCTIONS = {600: 58.0, 800: 52.0, 1000: 62.0}
REFERENCE_SUBJECT_TT_REDUCTIONS = {600: 51.0, 800: 47.0, 1000: 57.0}


def _report(criterion: str, ok: bool, detail: str) -> None:
    line = f"[acceptance] {criterion}: {'PASS' if ok else 'FAIL'} - {detail}"
    print(line)
    conftest.acceptance_lines.append(line)


@pytest.fixture(scope="session")
def full_suite(tmp_path_factory):
    out = tmp_path_factory.mktemp("acceptance_suite")
    config = ScenarioConfig()
    t0 = time.perf_counter()
    records = run_suite(config, out)
    wall = time.perf_counter() - t0
    compare(config, out)
    emit_plots(out)
    stats = aggregate(records)
    return {"config": config, "records": records, "out": out, "wall": wall, "stats": stats}


def test_criterion_01_optimizer_oracle_agreement():
    rng = np.random.default_rng(20260808)
    t0 = time.perf_counter()
    checked = 0
    for _ in range(50):
        p = InflowProblem(v_start=float(rng.uniform(2.6, 20.0)))
        r, o = solve_inflow(p), oracle_inflow(p)
        assert r.feasible and o.feasible
        assert r.objective <= o.objective + 1e-3
        assert p.slope_min - 1e-9 <= r.jerk_slope <= p.slope_max + 1e-9
        assert p.v_end_min - 1e-9 <= r.end_speed <= p.v_end_max + 1e-9
        assert p.j0_min - 1e-9 <= r.start_jerk <= p.j0_max + 1e-9
        assert 0.0 < r.duration < p.t_max + 1e-9
        end = r.profile(p.v_start).sample(r.duration)
        assert abs(end.accel) <= 1e-9
        checked += 1
    for _ in range(50):
        p = OutflowProblem(v_start=float(rng.uniform(0.0, 5.9)))
        r, o = solve_outflow(p), oracle_outflow(p)
        assert r.feasible == o.feasible
        if r.feasible:
            assert r.objective <= o.objective + 1e-3
            assert p.slope_min - 1e-9 <= r.jerk_slope <= p.slope_max + 1e-9
            assert max(p.v_end_min, p.v_start) - 1e-9 <= r.end_speed <= p.v_end_max + 1e-9
            assert p.j0_min - 1e-9 <= r.start_jerk <= p.j0_max + 1e-9
            assert p.t_min - 1e-9 < r.duration < p.t_max + 1e-9
            end = r.profile(p.v_start).sample(r.duration)
            assert abs(end.accel) <= 1e-9
        checked += 1
    for _ in range(50):
        p = BaseAvProblem(d_in=float(rng.uniform(10.0, 600.0)), v_max=13.4)
        r, o = solve_base_av(p), oracle_base_av(p)
        assert r.feasible == o.feasible
        if r.feasible:
            assert r.total_time <= o.objective + 1e-3
            assert p.v_in_min - 1e-9 <= r.v_in <= p.v_in_max + 1e-9
            assert p.a_in_min - 1e-9 <= r.a_in <= p.a_in_max + 1e-9
            assert r.cruise_time >= -1e-9
            assert 0.0 < r.total_time < p.t_max
        checked += 1
    elapsed = time.perf_counter() - t0
    ok = elapsed < 60.0
    _report("criterion 1 (optimizer vs oracle, 150 instances)", ok,
            f"{checked} instances agree within 1e-3, constraints within 1e-9, {elapsed:.1f}s")
    assert ok


def test_criterion_02_analytic_corners():
    inflow = solve_inflow(InflowProblem(v_start=13.4))
    assert inflow.jerk_slope == pytest.approx(0.1, abs=1e-6)
    assert inflow.end_speed == pytest.approx(2.5, abs=1e-6)
    assert inflow.duration == pytest.approx(10.936, abs=0.01)
    assert inflow.objective == pytest.approx(0.547, abs=0.001)

    outflow = solve_outflow(OutflowProblem(v_start=2.5))
    assert abs(outflow.jerk_slope) == pytest.approx(0.2, abs=1e-6)
    assert outflow.end_speed == pytest.approx(6.0, abs=1e-6)
    assert outflow.duration == pytest.approx(5.944, abs=0.01)

    base = solve_base_av(BaseAvProblem(d_in=270.45, v_max=13.4))
    assert base.total_time == pytest.approx(20.20, abs=0.01)

    d_stop = stopping_distance(13.4, 0.5, -1.5)
    assert d_stop == pytest.approx(66.55, abs=0.01)
    _report("criterion 2 (analytic corners)", True,
            f"inflow T={inflow.duration:.3f}s |J_T|={inflow.objective:.4f}, outflow T={outflow.duration:.3f}s, "
            f"schedule {base.total_time:.2f}s, stop distance {d_stop:.2f}m")


def test_criterion_03_arc_length():
    def simpson(height, chord, n=4000):
        h = chord / n
        total = 0.0
        for i in range(n + 1):
            u = -chord / 2.0 + i * h
            slope = -8.0 * height * u / (chord * chord)
            w = 1 if i in (0, n) else (4 if i % 2 else 2)
            total += w * math.sqrt(1.0 + slope * slope)
        return total * h / 3.0

    rng = np.random.default_rng(31415)
    worst = 0.0
    for _ in range(1000):
        height = float(rng.uniform(0.1, 20.0))
        chord = float(rng.uniform(0.1, 20.0))
        got = arc_length(height, chord)
        want = simpson(height, chord)
        rel = abs(got - want) / want
        worst = max(worst, rel)
        assert rel <= 1e-6
    flat = arc_length(1e-5, 10.0)
    assert flat == pytest.approx(10.0, abs=1e-3)
    _report("criterion 3 (arc length vs quadrature)", True,
            f"worst relative error {worst:.2e} over 1000 samples; flat limit {flat:.6f}")


def test_criterion_04_intent():
    rng = np.random.default_rng(99)
    for _ in range(500):
        est = intent_probability(
            FollowerKinematics(0.0, 10.0, float(rng.uniform(-3, 3)), float(rng.uniform(0.05, 8.0)))
        )
        assert abs(est.p_aggressive + est.p_non_aggressive - 1.0) <= 1e-12

    mid = intent_probability(FollowerKinematics(0.0, 10.0, 0.0, 1.5))
    assert mid.p_aggressive == 0.5

    for th in (0.3, 1.0, 2.0, 5.0):
        assert intent_probability(FollowerKinematics(0.0, 10.0, 2.0, th)).p_aggressive == 1.0
        assert intent_probability(FollowerKinematics(0.0, 10.0, 2.7, th)).p_aggressive == 1.0
        assert intent_probability(FollowerKinematics(0.0, 10.0, -2.0, th)).p_aggressive == 0.0

    def gauss(x, m, s):
        return math.exp(-0.5 * ((x - m) / s) ** 2) / (s * math.sqrt(2 * math.pi))

    la = gauss(1.0, 2.0, 4 / 3) * gauss(1.2, 1.0, 0.5)
    lna = gauss(1.0, -2.0, 4 / 3) * gauss(1.2, 2.0, 0.5)
    want = la * 0.5 / (la * 0.5 + lna * 0.5)
    got = intent_probability(FollowerKinematics(0.0, 10.0, 1.0, 1.2)).p_aggressive
    assert got == pytest.approx(want, abs=1e-9)
    _report("criterion 4 (intent posterior)", True,
            f"sum-to-1 within 1e-12, midpoint exact, saturation holds, worked example p={got:.6f}")


def test_criterion_05_kinematic_consistency():
    rng = np.random.default_rng(7)
    h = 1e-4
    for _ in range(100):
        p = JerkProfile(
            start_speed=float(rng.uniform(0.0, 20.0)),
            start_jerk=float(rng.uniform(-1.5, 1.5)),
            jerk_slope=float(rng.uniform(-0.8, 0.8)),
            duration=float(rng.uniform(1.0, 30.0)),
        )
        t = float(rng.uniform(h, p.duration - h))
        lo, mid, hi = p.sample(t - h), p.sample(t), p.sample(t + h)
        assert (hi.distance - lo.distance) / (2 * h) == pytest.approx(mid.speed, abs=1e-5)
        assert (hi.speed - lo.speed) / (2 * h) == pytest.approx(mid.accel, abs=1e-5)
        assert (hi.accel - lo.accel) / (2 * h) == pytest.approx(mid.jerk, abs=1e-5)

    for _ in range(100):
        v0 = float(rng.uniform(0.0, 25.0))
        j = float(rng.uniform(0.05, 0.8))
        T = float(rng.uniform(0.5, 40.0))
        prof = JerkProfile(v0, -j * T / 2.0, j, T)
        end = prof.sample(T)
        scale = max(1.0, j * T ** 3)
        assert abs(end.speed - (v0 - j * T ** 3 / 12.0)) <= 1e-9 * scale
        assert abs(end.distance - (v0 * T - j * T ** 4 / 24.0)) <= 1e-9 * max(1.0, v0 * T + j * T ** 4)
        assert abs(end.accel) <= 1e-9 * max(1.0, j * T * T)
    _report("criterion 5 (jerk-profile kinematics)", True,
            "finite-difference chain and zero-terminal-acceleration identities hold")


def test_criterion_06_safety(full_suite):
    records = full_suite["records"]
    sa_co = sum(r.co_occupancy for r in records if r.controller == "situation_aware")
    all_lane = sum(r.same_lane_collisions for r in records)
    ok = sa_co == 0 and all_lane == 0
    _report("criterion 6 (safety over default suite)", ok,
            f"situation-aware conflict-area co-occupancy events {sa_co}, same-lane collisions {all_lane} "
            f"across {len(records)} runs")
    assert ok


def test_criterion_07_determinism(full_suite, tmp_path_factory):
    out_a = full_suite["out"]
    out_b = tmp_path_factory.mktemp("acceptance_repeat")
    config = full_suite["config"]
    run_suite(config, out_b)
    compare(config, out_b)
    emit_plots(out_b)
    names = ["metrics.csv", "summary.csv", "brake_reductions.svg", "travel_times.svg", "progression.svg"]
    same = {n: (out_a / n).read_bytes() == (out_b / n).read_bytes() for n in names}
    ok = all(same.values())
    _report("criterion 7 (byte-identical repeat)", ok,
            ", ".join(f"{n}={'ok' if v else 'DIFFERS'}" for n, v in same.items()))
    assert ok


def _reductions(stats, volume, metric, baseline):
    sa = stats[(volume, "situation_aware")]
    return sa.reductions.get(baseline, {}).get(metric)


def test_criterion_08_brake_reduction(full_suite):
    stats = full_suite["stats"]
    details = []
    ok = True
    for volume in VOLUMES:
        for base in BASELINES:
            red = _reductions(stats, volume, "brake_events", base)
            base_mean = stats[(volume, base)].brake_mean
            treat_mean = stats[(volume, "situation_aware")].brake_mean
            if red is None:
                this_ok = treat_mean == 0.0  # nothing to reduce and no regressions
                details.append(f"{volume}@{base}: base 0 events, treated {treat_mean:.2f}")
            else:
                this_ok = red >= 10.0
                details.append(f"{volume}@{base}: {red:.1f}%")
            ok = ok and this_ok
        details.append(f"(reference {REFERENCE_BRAKE_REDUCTIONS[volume]:.0f}% at {volume})")
    _report("criterion 8 (hard-brake reduction >= 10%)", ok, "; ".join(details))
    assert ok


def test_criterion_09_follower_travel_time(full_suite):
    stats = full_suite["stats"]
    details = []
    ok = True
    for volume in VOLUMES:
        red = _reductions(stats, volume, "tt_follower", "base_av_2")
        this_ok = red is not None and red >= 25.0
        ok = ok and this_ok
        details.append(
            f"{volume}: {('%.1f%%' % red) if red is not None else 'n/a'}"
            f" (reference {REFERENCE_FOLLOWER_TT_REDUCTIONS[volume]:.0f}%)"
        )
    _report("criterion 9 (follower travel-time reduction vs base #2 >= 25%)", ok, "; ".join(details))
    assert ok


def test_criterion_10_subject_travel_time(full_suite):
    stats = full_suite["stats"]
    details = []
    ok = True
    for volume in VOLUMES:
        red = _reductions(stats, volume, "tt_subject", "base_av_2")
        this_ok = red is not None and red >= 25.0
        ok = ok and this_ok
        details.append(
            f"{volume}: {('%.1f%%' % red) if red is not None else 'n/a'}"
            f" (reference {REFERENCE_SUBJECT_TT_REDUCTIONS[volume]:.0f}%)"
        )
    ordering_ok = True
    for volume in VOLUMES:
        b1 = stats[(volume, "base_av_1")].tt_subject_mean
        b2 = stats[(volume, "base_av_2")].tt_subject_mean
        if not (b2 < b1):
            ordering_ok = False
        details.append(f"{volume}: base2 {b2:.1f}s < base1 {b1:.1f}s {'ok' if b2 < b1 else 'VIOLATED'}")
    ok = ok and ordering_ok
    _report("criterion 10 (subject travel-time reduction >= 25%, base ordering)", ok, "; ".join(details))
    assert ok


def test_criterion_11_follower_dwell(full_suite):
    records = full_suite["records"]
    by_key = {(r.volume, r.controller, r.seed): r for r in records}
    details = []
    ok = True
    eps = 0.05
    for volume in VOLUMES:
        seeds = sorted(r.seed for r in records if r.volume == volume and r.controller == "situation_aware")
        for base in BASELINES:
            violations = 0
            for seed in seeds:
                sa = by_key[(volume, "situation_aware", seed)]
                bl = by_key[(volume, base, seed)]
                if sa.follower_dwell > bl.follower_dwell + eps:
                    violations += 1
            this_ok = violations <= 2
            ok = ok and this_ok
            details.append(f"{volume}@{base}: {violations}/{len(seeds)} violations")
    _report("criterion 11 (dwell no worse than matched baseline, <= 2 of 30)", ok, "; ".join(details))
    assert ok


def test_criterion_12_runtime(full_suite):
    wall = full_suite["wall"]
    n = len(full_suite["records"])
    ok = wall < 300.0
    _report("criterion 12 (runtime budget)", ok, f"{n} runs in {wall:.1f}s (< 300s)")
    assert ok
