import math
import warnings

import numpy as np
import pytest

from turnsim.geometry import (
    IntersectionLayout,
    arc_length,
    conflict_clearances,
    partial_arc_length,
    path_station_of_conflicts,
)


def simpson_arc_length(height, chord, n=4000):
    """Independent quadrature oracle over the chord parameterization."""
    h = chord / n
    total = 0.0
    for i in range(n + 1):
        u = -chord / 2.0 + i * h
        slope = -8.0 * height * u / (chord * chord)
        w = 1 if i in (0, n) else (4 if i % 2 else 2)
        total += w * math.sqrt(1.0 + slope * slope)
    return total * h / 3.0


def arc_antiderivative(height, chord, u):
    """Closed-form antiderivative of the arc-length integrand (test oracle)."""
    k = 8.0 * height / (chord * chord)
    return 0.5 * u * math.sqrt(1.0 + k * k * u * u) + math.asinh(k * u) / (2.0 * k)


class TestArcLength:
    def test_flat_parabola_limit(self):
        assert arc_length(0.001, 10.0) == pytest.approx(10.0, abs=1e-3)

    def test_case_study_path(self):
        # w_l = 3.6 -> height 9, chord 10.8; frozen from the quadrature oracle
        assert arc_length(9.0, 10.8) == pytest.approx(21.901164000838, rel=1e-9)

    def test_unit_lane_width_against_quadrature(self):
        got = arc_length(2.5, 3.0)
        want = simpson_arc_length(2.5, 3.0)
        assert abs(got - want) / want <= 1e-6

    def test_matches_quadrature_over_random_inputs(self):
        rng = np.random.default_rng(20260808)
        for _ in range(1000):
            height = rng.uniform(0.1, 20.0)
            chord = rng.uniform(0.1, 20.0)
            got = arc_length(height, chord)
            want = simpson_arc_length(height, chord)
            assert abs(got - want) / want <= 1e-6

    def test_rejects_non_positive_dimensions(self):
        with pytest.raises(ValueError):
            arc_length(0.0, 1.0)
        with pytest.raises(ValueError):
            arc_length(1.0, -2.0)


class TestConflictClearances:
    def test_case_study_values(self):
        c = conflict_clearances(3.6, 1.8, 0.6, 1.2)
        assert c.far_pass == pytest.approx(1.175, abs=5e-4)
        assert c.far_approach == pytest.approx(5.375, abs=5e-4)
        assert c.near_pass == pytest.approx(0.397, abs=5e-4)
        assert c.near_approach == pytest.approx(4.597, abs=5e-4)

    def test_margins_removed(self):
        c = conflict_clearances(1.0, 0.0, 0.0, 0.0)
        assert c.near_pass == pytest.approx(1.0)
        assert c.near_approach == pytest.approx(1.0)
        assert c.far_pass == pytest.approx(1.41)
        assert c.far_approach == pytest.approx(1.41)

    def test_affine_in_vehicle_width(self):
        a = conflict_clearances(3.6, 1.0, 0.6, 1.2)
        b = conflict_clearances(3.6, 2.0, 0.6, 1.2)
        assert b.near_approach - a.near_approach == pytest.approx(0.5)
        assert b.far_approach - a.far_approach == pytest.approx(0.5)
        assert b.near_pass - a.near_pass == pytest.approx(-0.5)
        assert b.far_pass - a.far_pass == pytest.approx(-0.5)

    def test_affine_in_margins(self):
        a = conflict_clearances(3.6, 1.8, 0.5, 1.0)
        b = conflict_clearances(3.6, 1.8, 0.7, 1.0)
        assert b.near_approach - a.near_approach == pytest.approx(0.2)
        assert b.near_pass - a.near_pass == pytest.approx(-0.2)
        c = conflict_clearances(3.6, 1.8, 0.5, 1.4)
        assert c.near_approach - a.near_approach == pytest.approx(0.4)
        assert c.near_pass == pytest.approx(a.near_pass)

    def test_approach_exceeds_pass_side(self):
        rng = np.random.default_rng(7)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")  # some draws hit the clamp on purpose
            for _ in range(50):
                c = conflict_clearances(
                    rng.uniform(2.5, 4.5), rng.uniform(0.0, 2.2), rng.uniform(0.0, 1.0), rng.uniform(0.1, 2.0)
                )
                assert c.near_approach > c.near_pass
                assert c.far_approach > c.far_pass

    def test_negative_pass_clearance_clamped_with_warning(self):
        with pytest.warns(UserWarning):
            c = conflict_clearances(1.0, 4.0, 0.6, 1.2)
        assert c.near_pass == 0.0
        assert c.far_pass == 0.0

    def test_linearized_reading(self):
        c = conflict_clearances(3.6, 0.0, 0.0, 0.0, formula="linearized")
        assert c.near_pass == pytest.approx(3.6)
        assert c.far_pass == pytest.approx(1.41 * 3.6)

    def test_unknown_formula_rejected(self):
        with pytest.raises(ValueError):
            conflict_clearances(3.6, 1.8, 0.6, 1.2, formula="quadratic")


class TestTurnPathStations:
    def test_ordering_and_bounds(self):
        path = path_station_of_conflicts(IntersectionLayout(lane_width=3.6))
        assert 0.0 < path.near_entry_station
        assert path.near_entry_station < path.far_entry_station
        assert path.far_entry_station < path.far_exit_station
        assert path.far_exit_station < path.total_arc_length
        assert path.total_arc_length == pytest.approx(21.901164, abs=1e-4)

    def test_against_antiderivative_oracle(self):
        w = 3.6
        path = path_station_of_conflicts(IntersectionLayout(lane_width=w))
        height, chord = 2.5 * w, 3.0 * w
        half = chord / 2.0

        def oracle(transverse):
            return arc_antiderivative(height, chord, transverse - half) - arc_antiderivative(
                height, chord, -half
            )

        assert path.near_entry_station == pytest.approx(oracle(0.5 * w), abs=1e-8)
        assert path.near_exit_station == pytest.approx(oracle(1.5 * w), abs=1e-8)
        assert path.far_entry_station == pytest.approx(oracle(1.5 * w), abs=1e-8)
        assert path.far_exit_station == pytest.approx(oracle(2.5 * w), abs=1e-8)

    def test_scaling(self):
        p1 = path_station_of_conflicts(IntersectionLayout(lane_width=3.0))
        p2 = path_station_of_conflicts(IntersectionLayout(lane_width=6.0))
        assert p2.near_entry_station == pytest.approx(2.0 * p1.near_entry_station, rel=1e-9)
        assert p2.far_entry_station == pytest.approx(2.0 * p1.far_entry_station, rel=1e-9)
        assert p2.total_arc_length == pytest.approx(2.0 * p1.total_arc_length, rel=1e-9)

    def test_degenerate_lane_width_limit(self):
        path = path_station_of_conflicts(IntersectionLayout(lane_width=1e-6))
        assert path.near_entry_station < 1e-5
        assert path.far_exit_station < 1e-5

    def test_transverse_lookup(self):
        path = path_station_of_conflicts(IntersectionLayout(lane_width=3.6))
        assert path.transverse_at(0.0) == pytest.approx(0.0)
        assert path.transverse_at(path.total_arc_length) == pytest.approx(3 * 3.6, abs=1e-6)
        assert path.transverse_at(path.near_entry_station) == pytest.approx(1.8, abs=1e-3)
        assert path.transverse_at(path.far_entry_station) == pytest.approx(5.4, abs=1e-3)
        # monotone in station
        stations = np.linspace(0.0, path.total_arc_length, 200)
        values = [path.transverse_at(s) for s in stations]
        assert all(b >= a for a, b in zip(values, values[1:]))

    def test_zone_half_length(self):
        path = path_station_of_conflicts(IntersectionLayout(lane_width=3.6))
        # height spread over each crossed band: (9 - 5) / 2
        assert path.zone_half_length == pytest.approx(2.0, rel=1e-9)


class TestPartialArcLength:
    def test_full_span_matches_closed_form(self):
        got = partial_arc_length(9.0, 10.8, -5.4, 5.4)
        assert got == pytest.approx(arc_length(9.0, 10.8), rel=1e-10)

    def test_rejects_reversed_interval(self):
        with pytest.raises(ValueError):
            partial_arc_length(9.0, 10.8, 1.0, 0.0)


class TestLayout:
    def test_rejects_bad_lane_count(self):
        with pytest.raises(ValueError):
            IntersectionLayout(major_lanes_per_direction=3)

    def test_rejects_non_positive_widths(self):
        with pytest.raises(ValueError):
            IntersectionLayout(lane_width=0.0)
