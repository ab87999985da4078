"""Synthetic scanpath and click-stream generators.

Real gaze is unavailable at desk scale, so a seeded scanpath (alternating
fixations and instantaneous saccades) stands in for eye movement, and
each click method is modeled by the simplest mechanism that reproduces
its observed rate: periodic-with-jitter for controller turbo, an
anchor-radius timer for dwell, and a fatigue-decaying Poisson process for
pinch. Everything is deterministic under a fixed seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .model import GazePoint, GazeSession

TRAJECTORY_HZ = 100.0


@dataclass(frozen=True)
class ScanpathModel:
    fixation_log_mu: float = -1.2    # lognormal params of fixation duration (s)
    fixation_log_sigma: float = 0.5
    drift_per_s: float = 0.01        # within-fixation drift, normalized units/s
    regions: tuple[tuple[float, float, float, float], ...] = ()  # (x, y, w, h) boxes


# fixation durations tuned so dwell at its defaults fires at the observed
# dwell-control rate (~0.45 clicks/s, ~2.2 s between clicks)
DWELL_CALIBRATED_SCANPATH = ScanpathModel(
    fixation_log_mu=-0.15, fixation_log_sigma=1.1, drift_per_s=0.005
)


@dataclass(frozen=True)
class TurboParams:
    rate_hz: float = 16.7
    rate_jitter_fraction: float = 0.05
    hold_duty_cycle: float = 1.0   # fraction of each hold cycle the button is down
    hold_cycle_s: float = 2.0


@dataclass(frozen=True)
class DwellParams:
    dwell_time_s: float = 1.4
    movement_tolerance: float = 0.05  # normalized radius
    refractory_s: float = 0.0


@dataclass(frozen=True)
class PinchParams:
    base_rate_hz: float = 6.8
    fatigue_halflife_s: float = 120.0


@dataclass(frozen=True)
class ClickMethodModel:
    method: str = "simulated"
    turbo: TurboParams = field(default_factory=TurboParams)
    dwell: DwellParams = field(default_factory=DwellParams)
    pinch: PinchParams = field(default_factory=PinchParams)


def simulate_scanpath(
    duration_s: float,
    model: ScanpathModel = ScanpathModel(),
    seed: int = 0,
) -> np.ndarray:
    """Sample a gaze trajectory at 100 Hz; shape (n, 2), values in [0, 1]^2."""
    if not duration_s > 0:
        raise ValueError("duration must be positive")
    rng = np.random.default_rng(seed)
    n = int(math.ceil(duration_s * TRAJECTORY_HZ)) + 1
    dt = 1.0 / TRAJECTORY_HZ
    out = np.empty((n, 2), dtype=np.float64)
    i = 0
    while i < n:
        pos = _jump(rng, model.regions)
        fix_len = max(1, int(round(rng.lognormal(model.fixation_log_mu, model.fixation_log_sigma) * TRAJECTORY_HZ)))
        for _ in range(min(fix_len, n - i)):
            out[i] = pos
            i += 1
            step = rng.normal(0.0, model.drift_per_s * dt, size=2)
            pos = np.clip(pos + step, 0.0, 1.0)
    return out


def _jump(rng: np.random.Generator, regions) -> np.ndarray:
    if regions:
        x, y, w, h = regions[rng.integers(len(regions))]
        return np.array([x + rng.random() * w, y + rng.random() * h])
    return rng.random(2)


def _position_at(trajectory: np.ndarray, t: float) -> tuple[float, float]:
    idx = min(int(round(t * TRAJECTORY_HZ)), len(trajectory) - 1)
    return float(trajectory[idx, 0]), float(trajectory[idx, 1])


def simulate_turbo(
    duration_s: float,
    trajectory: np.ndarray,
    params: TurboParams = TurboParams(),
    seed: int = 0,
) -> list[GazePoint]:
    """Periodic clicks with per-interval jitter while the hold signal is on."""
    rng = np.random.default_rng(seed)
    base = 1.0 / params.rate_hz
    points: list[GazePoint] = []
    t = base * rng.random()  # random phase
    while t < duration_s:
        if _hold_on(t, params):
            x, y = _position_at(trajectory, t)
            points.append(GazePoint(x=x, y=y, t=t))
        t += base * (1.0 + params.rate_jitter_fraction * rng.uniform(-1.0, 1.0))
    return points


def _hold_on(t: float, params: TurboParams) -> bool:
    if params.hold_duty_cycle >= 1.0:
        return True
    phase = math.fmod(t, params.hold_cycle_s) / params.hold_cycle_s
    return phase < params.hold_duty_cycle


def simulate_dwell(
    duration_s: float,
    trajectory: np.ndarray,
    params: DwellParams = DwellParams(),
) -> list[GazePoint]:
    """Anchor-radius dwell timer: a click fires once the gaze has stayed
    within the movement tolerance of the anchor for the full dwell time.
    The anchor resets whenever the tolerance is exceeded; continuous fast
    motion therefore produces zero clicks."""
    dt = 1.0 / TRAJECTORY_HZ
    n = min(len(trajectory), int(math.ceil(duration_s * TRAJECTORY_HZ)) + 1)
    points: list[GazePoint] = []
    anchor = trajectory[0]
    timer = 0.0
    last_fire = -math.inf
    min_spacing = params.dwell_time_s + params.refractory_s
    for i in range(1, n):
        pos = trajectory[i]
        t = i * dt
        if math.hypot(pos[0] - anchor[0], pos[1] - anchor[1]) > params.movement_tolerance:
            anchor = pos
            timer = 0.0
            continue
        timer += dt
        if timer >= params.dwell_time_s and t - last_fire >= min_spacing:
            points.append(GazePoint(x=float(anchor[0]), y=float(anchor[1]), t=t))
            anchor = pos
            timer = 0.0
            last_fire = t
    return points


def simulate_pinch(
    duration_s: float,
    trajectory: np.ndarray,
    params: PinchParams = PinchParams(),
    seed: int = 0,
) -> list[GazePoint]:
    """Poisson clicks whose rate halves every fatigue halflife (thinning)."""
    rng = np.random.default_rng(seed)
    points: list[GazePoint] = []
    t = 0.0
    while True:
        t += rng.exponential(1.0 / params.base_rate_hz)
        if t >= duration_s:
            break
        accept = 2.0 ** (-t / params.fatigue_halflife_s) if math.isfinite(params.fatigue_halflife_s) else 1.0
        if rng.random() < accept:
            x, y = _position_at(trajectory, t)
            points.append(GazePoint(x=x, y=y, t=t))
    return points


def simulate_session(
    method: str,
    duration_s: float,
    seed: int,
    video_name: str = "simulated.mp4",
    scanpath: ScanpathModel | None = None,
    model: ClickMethodModel = ClickMethodModel(),
) -> GazeSession:
    """Generate a full session file payload for one simulated user.

    ``method`` selects the generative model (turbo/dwell/pinch); the
    emitted session is tagged click_method="simulated".
    """
    if scanpath is None:
        scanpath = DWELL_CALIBRATED_SCANPATH if method == "dwell" else ScanpathModel()
    trajectory = simulate_scanpath(duration_s, scanpath, seed=seed)
    if method == "turbo":
        points = simulate_turbo(duration_s, trajectory, model.turbo, seed=seed + 1)
    elif method == "dwell":
        points = simulate_dwell(duration_s, trajectory, model.dwell)
    elif method == "pinch":
        points = simulate_pinch(duration_s, trajectory, model.pinch, seed=seed + 1)
    else:
        raise ValueError(f"unknown simulation method {method!r}")
    return GazeSession(
        user_id=f"sim-{method}-{seed}",
        click_method="simulated",
        mode="video",
        video_name=video_name,
        video_duration_s=duration_s,
        points=tuple(points),
    )
