"""Timing-model tests, including the interval-overlap oracle for the row count."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from rollsim.sensor_timing import (
    CameraSpec,
    LaserConfig,
    delta_t_rst,
    distortion_bounds,
    distortion_size,
    distortions_per_frame,
    estimate_exposure,
    estimate_exposure_for,
    estimate_n_rows,
    log_grid,
    misestimation_ratio,
    misestimation_surface,
    on_time,
    timing_plan,
)

AXIS = CameraSpec(frame_rate=25, n_rows_total=2160, n_rows_visible=1080, name="axis")
LOGITECH = CameraSpec(frame_rate=30, n_rows_total=1080, n_rows_visible=1080, name="logitech")


def overlap_row_count(t_exp_ns: int, t_on_ns: int, dt_ns: int, o_ns: int) -> int:
    """Brute-force oracle: count rows whose exposure window meets the pulse.

    Row i integrates over [i*dt, i*dt + t_exp); the pulse starts o after a
    reset (reset index 0 without loss of generality) and lasts t_on.  Both
    intervals are half-open, so touching endpoints do not overlap.
    """
    pulse_lo = o_ns
    pulse_hi = o_ns + t_on_ns
    # Any affected row index lies in this (generous) range.
    i_lo = -(t_exp_ns // dt_ns) - 2
    i_hi = (pulse_hi // dt_ns) + 2
    starts = np.arange(i_lo, i_hi + 1, dtype=np.int64) * dt_ns
    hit = (starts < pulse_hi) & (pulse_lo < starts + t_exp_ns)
    return int(hit.sum())


class TestDeltaTRst:
    def test_axis_paper_value(self):
        assert delta_t_rst(AXIS) == pytest.approx(18.52, abs=0.005)

    def test_unit_case(self):
        assert delta_t_rst(CameraSpec(1, 1, 1)) == 1_000_000.0

    def test_30fps_1080(self):
        assert delta_t_rst(CameraSpec(30, 1080, 1080)) == pytest.approx(1e6 / 32400)


class TestEstimateNRows:
    def test_axis_dead_area(self):
        assert estimate_n_rows(1080, 0.5) == 2160

    def test_no_dead_area(self):
        assert estimate_n_rows(1080, 1.0) == 1080

    def test_fraction(self):
        assert estimate_n_rows(720, 0.75) == 960

    def test_rejects_nonpositive_fraction(self):
        with pytest.raises(ValueError):
            estimate_n_rows(1080, 0.0)
        with pytest.raises(ValueError):
            estimate_n_rows(1080, -0.5)


class TestEstimateExposure:
    def test_sunset(self):
        # H_v = 0.25 lx*s, sunset ambient ~400 lx
        assert estimate_exposure(0.25, 400) == pytest.approx(625.0)

    def test_ratio_of_one_is_a_second(self):
        assert estimate_exposure(3.7, 3.7) == pytest.approx(1e6)

    def test_cloudy_day_scale(self):
        assert estimate_exposure(0.25, 1250) == pytest.approx(200.0)

    def test_rejects_nonpositive(self):
        with pytest.raises(ValueError):
            estimate_exposure(0, 400)
        with pytest.raises(ValueError):
            estimate_exposure(0.25, -1)

    def test_clamped_to_camera_range(self):
        cam = CameraSpec(25, 2160, 1080, min_luminous_exposure=0.25, exposure_range=(32, 500))
        t, clamped = estimate_exposure_for(cam, 400)  # raw estimate 625us
        assert t == 500 and clamped

    def test_unclamped_inside_range(self):
        cam = CameraSpec(25, 2160, 1080, min_luminous_exposure=0.25, exposure_range=(32, 1000))
        t, clamped = estimate_exposure_for(cam, 400)
        assert t == pytest.approx(625.0) and not clamped

    def test_missing_h_v_is_an_error(self):
        with pytest.raises(ValueError, match="min_luminous_exposure"):
            estimate_exposure_for(AXIS, 400)


class TestDistortionSize:
    def test_single_row(self):
        assert distortion_size(10.0, 10.0, 10.0, 0.0) == 1

    def test_logitech_fixture(self):
        assert distortion_size(100, 320, 46.3, 0.0) == 9

    def test_with_offset(self):
        # ceil(22/18.5) + ceil(60/18.5) - 1 = 2 + 4 - 1
        assert distortion_size(32, 50, 18.5, 10) == 5

    def test_rejects_offset_outside_reset_interval(self):
        with pytest.raises(ValueError):
            distortion_size(32, 50, 18.5, 18.5)
        with pytest.raises(ValueError):
            distortion_size(32, 50, 18.5, -1)

    def test_matches_oracle_on_paper_fixtures(self):
        for t_exp, t_on, dt in [(100, 320, 46.3), (32, 50, 18.5), (2500, 16000, 46.3)]:
            for o in [0.0, dt / 3, dt * 0.999]:
                expected = overlap_row_count(
                    round(t_exp * 1000), round(t_on * 1000), round(dt * 1000), math.floor(o * 1000)
                )
                assert distortion_size(t_exp, t_on, dt, math.floor(o * 1000) / 1000) == expected


class TestDistortionBounds:
    def test_logitech(self):
        assert distortion_bounds(100, 320, 46.3) == (8, 10)

    def test_loose_lower_bound_can_be_zero(self):
        assert distortion_bounds(18.5, 18.5, 18.5) == (0, 2)

    def test_axis(self):
        # ceil(32/18.5) + ceil(50/18.5) = 2 + 3; brackets the N_o=5 case above
        assert distortion_bounds(32, 50, 18.5) == (3, 5)

    @given(
        t_exp=st.floats(10, 5000),
        t_on=st.floats(1, 20000),
        dt=st.floats(5, 100),
    )
    def test_gap_is_always_two(self, t_exp, t_on, dt):
        n_min, n_max = distortion_bounds(t_exp, t_on, dt)
        assert n_max - n_min == 2


class TestOnTime:
    def test_max_duty_paper(self):
        assert on_time(LaserConfig(750, 0.40)) == pytest.approx(533.3, abs=0.05)

    def test_min_duty_paper(self):
        assert on_time(LaserConfig(750, 0.001)) == pytest.approx(1.33, abs=0.005)

    def test_half_period(self):
        assert on_time(LaserConfig(100, 0.5)) == pytest.approx(5000.0)


class TestDistortionsPerFrame:
    def test_matched_frequency_no_dead_area(self):
        assert distortions_per_frame(LaserConfig(30, 0.1), LOGITECH) == pytest.approx(1.0)

    def test_one_distortion(self):
        cam = CameraSpec(25, 1080, 1080)
        assert distortions_per_frame(LaserConfig(25, 0.1), cam) == pytest.approx(1.0)

    def test_axis_flagship(self):
        assert distortions_per_frame(LaserConfig(750, 0.4), AXIS) == pytest.approx(15.0)

    def test_no_dead_area_250(self):
        cam = CameraSpec(25, 1080, 1080)
        assert distortions_per_frame(LaserConfig(250, 0.1), cam) == pytest.approx(10.0)

    @given(f=st.floats(1, 1000), frac=st.integers(1, 2160))
    def test_linear_in_frequency_and_fraction(self, f, frac):
        cam = CameraSpec(25, 2160, frac)
        base = distortions_per_frame(LaserConfig(f, 0.2), cam)
        doubled = distortions_per_frame(LaserConfig(2 * f, 0.2), cam)
        assert doubled == pytest.approx(2 * base, rel=1e-12)
        assert base == pytest.approx((f / 25) * (frac / 2160), rel=1e-12)


class TestTimingPlan:
    def test_plan_brackets_n_o(self):
        plan = timing_plan(AXIS, LaserConfig(750, 0.4), t_exp_us=200, o_us=5.0)
        assert plan.n_min <= plan.n_o <= plan.n_max
        assert plan.n_max - plan.n_min == 2
        assert plan.n_min_effective >= 1
        assert plan.n_d == pytest.approx(15.0)


class TestMisestimationRatio:
    def test_perfect_estimate(self):
        assert misestimation_ratio(200, 200, 533.3, 18.5) == 1.0

    def test_logitech_grid_endpoints(self):
        # N_max(2500,320)/N_max(100,320) = (54+7)/(3+7)
        assert misestimation_ratio(2500, 100, 320, 46.3) == pytest.approx(61 / 10)

    def test_logitech_longest_on_time(self):
        # (54+346)/(3+346); cf. the ~1.6 worst case reported for this camera
        assert misestimation_ratio(2500, 100, 16000, 46.3) == pytest.approx(400 / 349)

    @given(
        t_true=st.floats(32, 2500),
        t_est=st.floats(32, 2500),
        t_on=st.floats(50, 16000),
    )
    def test_monotone_in_true_exposure(self, t_true, t_est, t_on):
        r1 = misestimation_ratio(t_true, t_est, t_on, 18.5)
        r2 = misestimation_ratio(t_true * 1.5, t_est, t_on, 18.5)
        assert r2 >= r1


class TestMisestimationSurface:
    def test_degenerate_single_point(self):
        surf = misestimation_surface((100, 100), (320, 320), 46.3, points_per_axis=1)
        assert surf.rows == [(100, 100, 320, 1.0)]
        assert surf.max_ratio == 1.0
        assert surf.fraction_within_factor_2 == 1.0

    def test_logitech_full_grid_max_exceeds_4(self):
        surf = misestimation_surface((100, 2500), (320, 16000), 46.3)
        assert surf.max_ratio > 4

    def test_axis_shortest_on_time_worst_case(self):
        surf = misestimation_surface((32, 1000), (50, 400), 18.5)
        assert surf.worst_ratio_at_t_on(50.0) == pytest.approx(11.6, abs=2.0)

    def test_grid_endpoints_exact(self):
        grid = log_grid(320, 16000, 32)
        assert grid[0] == 320 and grid[-1] == 16000
        assert len(grid) == 32


@settings(max_examples=300, deadline=None)
@given(
    t_exp_ns=st.integers(10_000, 2_500_000),
    t_on_ns=st.integers(1_000, 16_000_000),
    dt_ns=st.integers(5_000, 100_000),
    o_frac=st.floats(0, 1, exclude_max=True),
)
def test_row_count_equals_overlap_oracle(t_exp_ns, t_on_ns, dt_ns, o_frac):
    """Eq-based count == brute-force half-open interval overlap count."""
    o_ns = int(o_frac * dt_ns)
    got = distortion_size(t_exp_ns / 1000, t_on_ns / 1000, dt_ns / 1000, o_ns / 1000)
    assert got == overlap_row_count(t_exp_ns, t_on_ns, dt_ns, o_ns)


@settings(max_examples=300, deadline=None)
@given(
    t_exp_ns=st.integers(10_000, 2_500_000),
    t_on_ns=st.integers(1_000, 16_000_000),
    dt_ns=st.integers(5_000, 100_000),
    o_frac=st.floats(0, 1, exclude_max=True),
)
def test_bounds_bracket_row_count(t_exp_ns, t_on_ns, dt_ns, o_frac):
    o_ns = int(o_frac * dt_ns)
    n_o = distortion_size(t_exp_ns / 1000, t_on_ns / 1000, dt_ns / 1000, o_ns / 1000)
    n_min, n_max = distortion_bounds(t_exp_ns / 1000, t_on_ns / 1000, dt_ns / 1000)
    assert n_min <= n_o <= n_max


@given(
    t_exp=st.floats(10, 2500),
    t_on=st.floats(1, 16000),
    dt=st.floats(5, 100),
    o_frac=st.floats(0, 0.999),
    bump=st.floats(1, 100),
)
def test_size_nondecreasing_in_exposure_and_on_time(t_exp, t_on, dt, o_frac, bump):
    o = o_frac * dt
    base = distortion_size(t_exp, t_on, dt, o)
    assert distortion_size(t_exp + bump, t_on, dt, o) >= base
    assert distortion_size(t_exp, t_on + bump, dt, o) >= base
