"""Calibration precision scores and click-rate statistics."""

from __future__ import annotations

import json
import math
import statistics
from dataclasses import dataclass
from typing import Mapping, Sequence

from .model import GazeSession, PrecisionAttempt


@dataclass(frozen=True)
class PrecisionResult:
    per_attempt_scores: tuple[float, ...]
    average_score: float


@dataclass(frozen=True)
class ClickStats:
    total_clicks: int
    mean_cps: float | None
    mean_interval_s: float | None
    median_interval_s: float | None
    cps_series: tuple[tuple[float, float], ...] = ()


def precision_score(attempts: Sequence[PrecisionAttempt]) -> PrecisionResult:
    """Linear falloff score: 100 at the target center, 0 at the circle edge.

    Distance and radius share units, so the score is scale-invariant.
    """
    if not attempts:
        raise ValueError("at least one attempt required")
    scores = []
    for a in attempts:
        d = math.hypot(a.click_x - a.center_x, a.click_y - a.center_y)
        scores.append(100.0 * max(0.0, 1.0 - d / a.target_radius))
    return PrecisionResult(
        per_attempt_scores=tuple(scores),
        average_score=sum(scores) / len(scores),
    )


def speed_test_cps(timestamps: Sequence[float]) -> float:
    """Average click rate; the first click starts the clock, so N clicks
    span N-1 intervals."""
    if len(timestamps) < 2:
        raise ValueError("need at least 2 clicks")
    elapsed = timestamps[-1] - timestamps[0]
    if elapsed <= 0:
        raise ValueError("zero elapsed time")
    return (len(timestamps) - 1) / elapsed


def interval_stats(timestamps: Sequence[float]) -> tuple[float, float]:
    """Mean and median of successive inter-click intervals."""
    if len(timestamps) < 2:
        raise ValueError("need at least 2 clicks")
    intervals = [b - a for a, b in zip(timestamps, timestamps[1:])]
    return statistics.fmean(intervals), statistics.median(intervals)


def cps_timeseries(
    timestamps: Sequence[float],
    window: tuple[float, float],
    bin_s: float = 1.0,
) -> tuple[list[tuple[float, float]], float]:
    """Per-bin click rates over [start, end) plus the window mean rate."""
    start, end = window
    if not start < end:
        raise ValueError("window start must precede end")
    if not bin_s > 0:
        raise ValueError("bin size must be positive")
    n_bins = int(math.ceil((end - start) / bin_s))
    counts = [0] * n_bins
    in_window = 0
    for t in timestamps:
        if start <= t < end:
            counts[min(int((t - start) / bin_s), n_bins - 1)] += 1
            in_window += 1
    series = [(start + i * bin_s, c / bin_s) for i, c in enumerate(counts)]
    mean = in_window / (end - start)
    return series, mean


def session_click_stats(
    session: GazeSession, window: tuple[float, float] | None = None
) -> ClickStats:
    ts = session.timestamps()
    mean_i = median_i = cps = None
    series: tuple[tuple[float, float], ...] = ()
    if len(ts) >= 2:
        mean_i, median_i = interval_stats(ts)
        if ts[-1] > ts[0]:
            cps = speed_test_cps(ts)
    if window is not None:
        s, _ = cps_timeseries(ts, window)
        series = tuple(s)
    return ClickStats(
        total_clicks=len(ts),
        mean_cps=cps,
        mean_interval_s=mean_i,
        median_interval_s=median_i,
        cps_series=series,
    )


def group_summary(sessions: Sequence[GazeSession]) -> dict[str, float]:
    """Mean total clicks per (method, video) cell, keyed "method/video".

    Cells with no sessions simply do not appear (absent, never zero).
    """
    cells: dict[str, list[int]] = {}
    for s in sessions:
        cells.setdefault(f"{s.click_method}/{s.video_name}", []).append(s.total_clicks)
    return {k: sum(v) / len(v) for k, v in sorted(cells.items())}


def summary_report(cells: Mapping[str, float]) -> bytes:
    """Canonical JSON report (same conventions as the session file format)."""
    doc = {"cells": {k: float(f"{v:.6f}") for k, v in cells.items()}}
    return json.dumps(doc, sort_keys=True, separators=(",", ":")).encode("utf-8")
