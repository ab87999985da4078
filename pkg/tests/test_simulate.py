import math

import numpy as np
import pytest

from itrace.model import write_session
from itrace.simulate import (
    DWELL_CALIBRATED_SCANPATH,
    DwellParams,
    PinchParams,
    ScanpathModel,
    TurboParams,
    simulate_dwell,
    simulate_pinch,
    simulate_scanpath,
    simulate_session,
    simulate_turbo,
)


def stationary_trajectory(duration_s, x=0.5, y=0.5):
    n = int(math.ceil(duration_s * 100)) + 1
    return np.tile(np.array([x, y]), (n, 1))


def circular_trajectory(duration_s, radius=0.3, period_s=1.0):
    """Continuous wide motion: exceeds any small tolerance every few samples."""
    n = int(math.ceil(duration_s * 100)) + 1
    t = np.arange(n) / 100.0
    ang = 2 * math.pi * t / period_s
    return np.stack([0.5 + radius * np.cos(ang), 0.5 + radius * np.sin(ang)], axis=1)


class TestScanpath:
    def test_deterministic_under_seed(self):
        a = simulate_scanpath(5.0, seed=7)
        b = simulate_scanpath(5.0, seed=7)
        assert np.array_equal(a, b)

    def test_positions_in_unit_square(self):
        traj = simulate_scanpath(30.0, seed=1)
        assert traj.min() >= 0.0 and traj.max() <= 1.0

    def test_zero_drift_single_fixation_constant(self):
        model = ScanpathModel(fixation_log_mu=5.0, fixation_log_sigma=0.01, drift_per_s=0.0)
        traj = simulate_scanpath(2.0, model, seed=0)
        assert np.all(traj == traj[0])

    def test_fixation_duration_mean_matches_lognormal(self):
        # Monte-Carlo oracle for the lognormal mean exp(mu + sigma^2/2)
        mu, sigma = -1.2, 0.5
        rng = np.random.default_rng(42)
        samples = rng.lognormal(mu, sigma, size=10_000)
        assert samples.mean() == pytest.approx(math.exp(mu + sigma**2 / 2), rel=0.03)

    def test_region_jumps_stay_in_regions(self):
        model = ScanpathModel(regions=((0.0, 0.0, 0.2, 0.2),), drift_per_s=0.0)
        traj = simulate_scanpath(10.0, model, seed=3)
        assert traj[:, 0].max() <= 0.2 and traj[:, 1].max() <= 0.2


class TestTurbo:
    def test_rate_times_time(self):
        traj = stationary_trajectory(60.0)
        pts = simulate_turbo(60.0, traj, TurboParams(), seed=0)
        assert len(pts) == pytest.approx(1002, rel=0.05)

    def test_duty_cycle_scales_count(self):
        traj = stationary_trajectory(60.0)
        pts = simulate_turbo(60.0, traj, TurboParams(hold_duty_cycle=0.85), seed=0)
        assert len(pts) == pytest.approx(851, rel=0.07)

    def test_deterministic(self):
        traj = stationary_trajectory(10.0)
        a = simulate_turbo(10.0, traj, seed=5)
        b = simulate_turbo(10.0, traj, seed=5)
        assert a == b

    def test_interval_coefficient_of_variation_bounded(self):
        traj = stationary_trajectory(120.0)
        params = TurboParams()
        pts = simulate_turbo(120.0, traj, params, seed=1)
        intervals = np.diff([p.t for p in pts])
        cov = intervals.std() / intervals.mean()
        assert cov <= params.rate_jitter_fraction * 1.1

    def test_positions_track_trajectory(self):
        traj = circular_trajectory(5.0)
        pts = simulate_turbo(5.0, traj, seed=2)
        for p in pts:
            idx = min(int(round(p.t * 100)), len(traj) - 1)
            assert (p.x, p.y) == (traj[idx, 0], traj[idx, 1])


class TestDwell:
    def test_continuous_fast_motion_no_clicks(self):
        traj = circular_trajectory(30.0)
        assert simulate_dwell(30.0, traj) == []

    def test_stationary_trajectory_period_arithmetic(self):
        traj = stationary_trajectory(60.0)
        pts = simulate_dwell(60.0, traj, DwellParams(dwell_time_s=1.4))
        assert len(pts) == math.floor(60 / 1.4)

    def test_minimum_click_spacing(self):
        traj = simulate_scanpath(120.0, DWELL_CALIBRATED_SCANPATH, seed=9)
        params = DwellParams(refractory_s=0.2)
        pts = simulate_dwell(120.0, traj, params)
        intervals = np.diff([p.t for p in pts])
        assert np.all(intervals >= params.dwell_time_s + params.refractory_s - 1e-9)

    def test_calibrated_rate_brackets_observed(self):
        rates, intervals = [], []
        for seed in range(5):
            traj = simulate_scanpath(120.0, DWELL_CALIBRATED_SCANPATH, seed=seed)
            pts = simulate_dwell(120.0, traj)
            rates.append(len(pts) / 120.0)
            ts = [p.t for p in pts]
            intervals.extend(np.diff(ts))
        assert 0.4 <= np.mean(rates) <= 0.8
        assert 1.9 <= np.mean(intervals) <= 2.6


class TestPinch:
    def test_initial_rate(self):
        traj = stationary_trajectory(10.0)
        counts = [
            len(simulate_pinch(10.0, traj, PinchParams(fatigue_halflife_s=math.inf), seed=s))
            for s in range(20)
        ]
        assert np.mean(counts) / 10.0 == pytest.approx(6.8, rel=0.1)

    def test_rate_halves_at_halflife(self):
        params = PinchParams(fatigue_halflife_s=30.0)
        traj = stationary_trajectory(40.0)
        # empirical rate in a window around t = halflife, averaged over seeds
        rates = []
        for s in range(40):
            pts = simulate_pinch(40.0, traj, params, seed=s)
            rates.append(sum(1 for p in pts if 28.0 <= p.t < 32.0) / 4.0)
        assert np.mean(rates) == pytest.approx(3.4, rel=0.1)

    def test_no_fatigue_limit_homogeneous(self):
        params = PinchParams(fatigue_halflife_s=math.inf)
        traj = stationary_trajectory(60.0)
        counts = [len(simulate_pinch(60.0, traj, params, seed=s)) for s in range(10)]
        assert np.mean(counts) == pytest.approx(6.8 * 60, rel=0.08)


class TestSession:
    def test_points_valid_and_sorted(self):
        for method in ("turbo", "dwell", "pinch"):
            s = simulate_session(method, 20.0, seed=3)
            ts = [p.t for p in s.points]
            assert ts == sorted(ts)
            assert all(0 <= p.x <= 1 and 0 <= p.y <= 1 and p.t >= 0 for p in s.points)
            assert s.click_method == "simulated"

    def test_byte_identical_under_seed(self):
        a = simulate_session("turbo", 10.0, seed=1)
        b = simulate_session("turbo", 10.0, seed=1)
        assert write_session(a) == write_session(b)

    def test_unknown_method_rejected(self):
        with pytest.raises(ValueError):
            simulate_session("blink", 10.0, seed=0)
