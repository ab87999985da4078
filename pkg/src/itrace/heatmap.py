"""Heatmap engine core: brightness volumes, fade, blur, overlay, merging.

All stage functions are pure; the renderer in render.py chains them. The
naive full-volume builder here doubles as the oracle for the streaming
renderer's sliding-window implementation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import cv2
import numpy as np

from .model import GazePoint, GazeSession


@dataclass(frozen=True)
class RenderConfig:
    fps: float = 30.0
    working_width: int = 640
    fade_duration_s: float = 0.3
    blur_sigma_px: float | None = None  # None -> 2% of working width
    darken_factor: float = 0.5
    hold_seconds: float = 3.0
    delay_offset_s: float = 0.0  # spatial mode only
    crop_top_px: int = 0        # spatial mode only
    crop_bottom_px: int = 0     # spatial mode only

    def __post_init__(self):
        if not self.fps > 0:
            raise ValueError("fps must be > 0")
        if not self.fade_duration_s > 0:
            raise ValueError("fade_duration_s must be > 0")
        if not 0.0 < self.darken_factor <= 1.0:
            raise ValueError("darken_factor must be in (0, 1]")

    @property
    def sigma_px(self) -> float:
        if self.blur_sigma_px is not None:
            return self.blur_sigma_px
        return 0.02 * self.working_width


def temporal_weight(dt: float, fade_duration: float) -> float:
    """Linear fade peaking at dt = 0 and reaching zero at |dt| = fade."""
    return max(0.0, 1.0 - abs(dt) / fade_duration)


def point_pixel(x: float, y: float, width: int, height: int) -> tuple[int, int]:
    """Map normalized coordinates to the containing pixel (edge-clamped)."""
    px = min(int(math.floor(x * width)), width - 1)
    py = min(int(math.floor(y * height)), height - 1)
    return px, py


def frame_count(duration_s: float, fps: float) -> int:
    return int(math.ceil(duration_s * fps))


def build_brightness_volume(
    points: Sequence[GazePoint],
    cfg: RenderConfig,
    duration_s: float,
    dims: tuple[int, int],
) -> np.ndarray:
    """Accumulate temporally-faded point brightness into a (frames, h, w) array.

    Purely additive, so the result is order-independent and linear in the
    point list. Intended for small fixtures and as the streaming oracle.
    """
    width, height = dims
    if width <= 0 or height <= 0:
        raise ValueError("frame dimensions must be positive")
    n_frames = frame_count(duration_s, cfg.fps)
    vol = np.zeros((n_frames, height, width), dtype=np.float64)
    for p in points:
        px, py = point_pixel(p.x, p.y, width, height)
        f_lo = max(0, int(math.ceil((p.t - cfg.fade_duration_s) * cfg.fps)))
        f_hi = min(n_frames - 1, int(math.floor((p.t + cfg.fade_duration_s) * cfg.fps)))
        for f in range(f_lo, f_hi + 1):
            w = temporal_weight(f / cfg.fps - p.t, cfg.fade_duration_s)
            if w > 0.0:
                vol[f, py, px] += w
    return vol


def frame_brightness(
    points: Sequence[GazePoint],
    frame_index: int,
    cfg: RenderConfig,
    dims: tuple[int, int],
) -> np.ndarray:
    """Brightness field of a single frame; used by the streaming renderer."""
    width, height = dims
    t_frame = frame_index / cfg.fps
    out = np.zeros((height, width), dtype=np.float64)
    for p in points:
        w = temporal_weight(t_frame - p.t, cfg.fade_duration_s)
        if w > 0.0:
            px, py = point_pixel(p.x, p.y, width, height)
            out[py, px] += w
    return out


def normalize_brightness(vol: np.ndarray, global_max: float | None = None) -> np.ndarray:
    """Square-root normalization against the global volume maximum.

    Monotone per cell, so per-frame argmax locations are preserved. An
    all-zero volume is returned unchanged.
    """
    m = float(np.max(vol)) if global_max is None else float(global_max)
    if m == 0.0:
        return np.array(vol, dtype=np.float64, copy=True)
    return np.sqrt(np.asarray(vol, dtype=np.float64) / m)


def gaussian_kernel_1d(sigma: float) -> np.ndarray:
    radius = int(math.ceil(3.0 * sigma))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def blur_frame(field: np.ndarray, sigma_px: float) -> np.ndarray:
    """Separable Gaussian blur, kernel truncated at radius ceil(3*sigma),
    reflective boundaries. sigma 0 is the identity."""
    if sigma_px < 0:
        raise ValueError("sigma must be >= 0")
    f = np.asarray(field, dtype=np.float64)
    if sigma_px == 0:
        return f.copy()
    k = gaussian_kernel_1d(sigma_px)
    return cv2.sepFilter2D(f, -1, k, k, borderType=cv2.BORDER_REFLECT)


def composite(
    heat_rgb: np.ndarray,
    heat_strength: np.ndarray,
    background_rgb: np.ndarray,
    darken_factor: float,
) -> np.ndarray:
    """Alpha-blend heat over a darkened background; alpha = heat strength."""
    if heat_rgb.shape != background_rgb.shape or heat_strength.shape != heat_rgb.shape[:2]:
        raise ValueError("frame dimension mismatch")
    alpha = np.clip(np.asarray(heat_strength, dtype=np.float64), 0.0, 1.0)[..., None]
    bg = background_rgb.astype(np.float64)
    heat = heat_rgb.astype(np.float64)
    out = bg * darken_factor * (1.0 - alpha) + heat * alpha
    return np.round(out).astype(np.uint8)


def cumulative_field(points: Sequence[GazePoint], dims: tuple[int, int]) -> np.ndarray:
    """All-points accumulation with unit weight (no temporal fade)."""
    width, height = dims
    out = np.zeros((height, width), dtype=np.float64)
    for p in points:
        px, py = point_pixel(p.x, p.y, width, height)
        out[py, px] += 1.0
    return out


def cumulative_frame(
    points: Sequence[GazePoint],
    background_rgb: np.ndarray,
    sigma_px: float,
    darken_factor: float,
) -> np.ndarray:
    """Summary frame: every point with unit weight, normalized against its
    own maximum, blurred, color-mapped, and composited over the background."""
    from .inferno import apply_colormap

    height, width = background_rgb.shape[:2]
    field = normalize_brightness(cumulative_field(points, (width, height)))
    strength = blur_frame(field, sigma_px)
    return composite(apply_colormap(strength), strength, background_rgb, darken_factor)


def merge_sessions(sessions: Sequence[GazeSession]) -> list[GazePoint]:
    """Multiset union of all sessions' points, re-sorted by timestamp.

    Identical points from different users are intentionally kept so
    overlapping attention doubles brightness.
    """
    if not sessions:
        raise ValueError("no sessions to merge")
    names = {s.video_name for s in sessions}
    if len(names) > 1:
        raise ValueError(f"sessions reference different videos: {sorted(names)}")
    merged: list[GazePoint] = []
    for s in sessions:
        merged.extend(s.points)
    merged.sort(key=lambda p: p.t)
    return merged


def remap_spatial(
    points: Sequence[GazePoint],
    cfg: RenderConfig,
    recorded_height: int,
) -> tuple[list[GazePoint], list[int]]:
    """Apply delay compensation and vertical crop remapping.

    Returns (kept points, indices of dropped input points). Points whose
    shifted time precedes recording start, or whose y maps outside the
    cropped frame, are dropped.
    """
    if cfg.crop_top_px + cfg.crop_bottom_px >= recorded_height:
        raise ValueError("crops exceed recorded frame height")
    usable = recorded_height - cfg.crop_top_px - cfg.crop_bottom_px
    kept: list[GazePoint] = []
    dropped: list[int] = []
    for i, p in enumerate(points):
        t = p.t - cfg.delay_offset_s
        if t < 0:
            dropped.append(i)
            continue
        y = (p.y * recorded_height - cfg.crop_top_px) / usable
        if not 0.0 <= y <= 1.0:
            dropped.append(i)
            continue
        kept.append(GazePoint(x=p.x, y=y, t=t))
    return kept, dropped
