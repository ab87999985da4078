"""Streaming heatmap video renderer and frame IO adapters.

Two interchangeable frame transports:

* frame-folder mode: numbered lossless PNGs plus a small ``meta.txt``
  (fps, width, height). Bit-exact and used for determinism tests.
* video-file mode: anything OpenCV can decode; encoded with mp4v.

The renderer streams one frame at a time. Because the temporal fade has
bounded support, the global normalization maximum is computed in a cheap
sparse pre-pass instead of materializing the full brightness volume.
"""

from __future__ import annotations

import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Sequence

import cv2
import numpy as np

from . import heatmap, model
from .heatmap import RenderConfig
from .inferno import apply_colormap


class RenderError(RuntimeError):
    def __init__(self, stage: str, message: str):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


# ---------------------------------------------------------------------------
# Frame sources / sinks


class FolderFrameSource:
    """Reads frame_NNNNNN.png files plus meta.txt from a directory."""

    def __init__(self, folder: str | os.PathLike):
        self.folder = Path(folder)
        meta = self.folder / "meta.txt"
        if not meta.is_file():
            raise RenderError("decode", f"missing meta.txt in {self.folder}")
        kv = {}
        for line in meta.read_text().splitlines():
            if "=" in line:
                k, v = line.split("=", 1)
                kv[k.strip()] = v.strip()
        try:
            self.fps = float(kv["fps"])
            self.width = int(kv["width"])
            self.height = int(kv["height"])
        except KeyError as e:
            raise RenderError("decode", f"meta.txt missing {e}") from e
        self._files = sorted(self.folder.glob("frame_*.png"))
        if not self._files:
            raise RenderError("decode", f"no frames in {self.folder}")

    @property
    def frame_count(self) -> int:
        return len(self._files)

    def frames(self) -> Iterator[np.ndarray]:
        for f in self._files:
            img = cv2.imread(str(f), cv2.IMREAD_COLOR)
            if img is None:
                raise RenderError("decode", f"unreadable frame {f}")
            yield cv2.cvtColor(img, cv2.COLOR_BGR2RGB)


class VideoFileSource:
    def __init__(self, path: str | os.PathLike):
        self.path = str(path)
        cap = cv2.VideoCapture(self.path)
        if not cap.isOpened():
            raise RenderError("decode", f"cannot open video {self.path}")
        self.fps = cap.get(cv2.CAP_PROP_FPS) or 30.0
        self.width = int(cap.get(cv2.CAP_PROP_FRAME_WIDTH))
        self.height = int(cap.get(cv2.CAP_PROP_FRAME_HEIGHT))
        self.frame_count = int(cap.get(cv2.CAP_PROP_FRAME_COUNT))
        cap.release()
        if self.frame_count <= 0 or self.width <= 0:
            raise RenderError("decode", f"undecodable video {self.path}")

    def frames(self) -> Iterator[np.ndarray]:
        cap = cv2.VideoCapture(self.path)
        try:
            while True:
                ok, frame = cap.read()
                if not ok:
                    break
                yield cv2.cvtColor(frame, cv2.COLOR_BGR2RGB)
        finally:
            cap.release()


def open_frame_source(path: str | os.PathLike):
    p = Path(path)
    if p.is_dir():
        return FolderFrameSource(p)
    return VideoFileSource(p)


class FolderFrameSink:
    def __init__(self, folder: str | os.PathLike, fps: float, width: int, height: int):
        self.folder = Path(folder)
        self.folder.mkdir(parents=True, exist_ok=True)
        (self.folder / "meta.txt").write_text(
            f"fps={fps:g}\nwidth={width}\nheight={height}\n"
        )
        self._i = 0

    def write(self, frame_rgb: np.ndarray) -> None:
        out = self.folder / f"frame_{self._i:06d}.png"
        cv2.imwrite(str(out), cv2.cvtColor(frame_rgb, cv2.COLOR_RGB2BGR))
        self._i += 1

    def close(self) -> None:
        pass

    @property
    def path(self) -> Path:
        return self.folder


class VideoFileSink:
    def __init__(self, path: str | os.PathLike, fps: float, width: int, height: int):
        self._path = Path(path)
        self._path.parent.mkdir(parents=True, exist_ok=True)
        fourcc = cv2.VideoWriter_fourcc(*"mp4v")
        self._writer = cv2.VideoWriter(str(self._path), fourcc, fps, (width, height))
        if not self._writer.isOpened():
            raise RenderError("encode", f"cannot open encoder for {self._path}")

    def write(self, frame_rgb: np.ndarray) -> None:
        self._writer.write(cv2.cvtColor(frame_rgb, cv2.COLOR_RGB2BGR))

    def close(self) -> None:
        self._writer.release()

    @property
    def path(self) -> Path:
        return self._path


# ---------------------------------------------------------------------------
# Streaming renderer


def working_dims(src_w: int, src_h: int, working_width: int) -> tuple[int, int]:
    """Aspect-preserving downscale to the working width, even dimensions."""
    w = min(working_width, src_w)
    w -= w % 2
    h = max(2, round(src_h * w / src_w))
    h -= h % 2
    return w, h


@dataclass
class _PointArrays:
    t: np.ndarray
    px: np.ndarray
    py: np.ndarray

    @classmethod
    def from_points(cls, points: Sequence[model.GazePoint], width: int, height: int):
        t = np.array([p.t for p in points], dtype=np.float64)
        order = np.argsort(t, kind="stable")
        t = t[order]
        px = np.empty(len(points), dtype=np.intp)
        py = np.empty(len(points), dtype=np.intp)
        for i, oi in enumerate(order):
            px[i], py[i] = heatmap.point_pixel(points[oi].x, points[oi].y, width, height)
        return cls(t=t, px=px, py=py)

    def frame_field(self, frame_index: int, cfg: RenderConfig, shape: tuple[int, int]) -> np.ndarray:
        """Brightness of one frame, touching only points inside the fade window."""
        field = np.zeros(shape, dtype=np.float64)
        tf = frame_index / cfg.fps
        lo = np.searchsorted(self.t, tf - cfg.fade_duration_s, side="right")
        hi = np.searchsorted(self.t, tf + cfg.fade_duration_s, side="left")
        if lo < hi:
            w = 1.0 - np.abs(tf - self.t[lo:hi]) / cfg.fade_duration_s
            np.add.at(field, (self.py[lo:hi], self.px[lo:hi]), np.maximum(w, 0.0))
        return field

    def global_max(self, n_frames: int, cfg: RenderConfig, shape: tuple[int, int]) -> float:
        m = 0.0
        for f in range(n_frames):
            field = self.frame_field(f, cfg, shape)
            m = max(m, float(field.max()) if field.size else 0.0)
        return m


@dataclass(frozen=True)
class RenderResult:
    output_path: Path
    echo_path: Path
    frame_total: int
    width: int
    height: int
    fps: float


def render_frames(
    source,
    points: Sequence[model.GazePoint],
    cfg: RenderConfig,
) -> Iterator[np.ndarray]:
    """Yield every output frame (fade frames then the held cumulative ones)."""
    w, h = working_dims(source.width, source.height, cfg.working_width)
    duration_s = source.frame_count / source.fps
    n_frames = heatmap.frame_count(duration_s, cfg.fps)
    hold_frames = round(cfg.hold_seconds * cfg.fps)
    pts = _PointArrays.from_points(points, w, h)
    global_max = pts.global_max(n_frames, cfg, (h, w))
    # default sigma tracks the actual working width so spot size is
    # scale-invariant; an explicit sigma is honored verbatim
    sigma = cfg.blur_sigma_px if cfg.blur_sigma_px is not None else 0.02 * w

    src_iter = source.frames()
    src_index = -1
    current = None

    def background_for(frame_index: int) -> np.ndarray:
        nonlocal src_index, current
        want = min(
            int(math.floor(frame_index / cfg.fps * source.fps)),
            source.frame_count - 1,
        )
        while src_index < want:
            nxt = next(src_iter, None)
            if nxt is None:
                break
            current = cv2.resize(nxt, (w, h), interpolation=cv2.INTER_AREA)
            src_index += 1
        if current is None:
            raise RenderError("decode", "video yielded no frames")
        return current

    for f in range(n_frames):
        bg = background_for(f)
        field = pts.frame_field(f, cfg, (h, w))
        if global_max > 0.0:
            field = np.sqrt(field / global_max)
        strength = heatmap.blur_frame(field, sigma)
        yield heatmap.composite(apply_colormap(strength), strength, bg, cfg.darken_factor)

    # drain any remaining source frames so the cumulative background is the
    # true final frame even when the output fps undersamples the source
    for nxt in src_iter:
        current = cv2.resize(nxt, (w, h), interpolation=cv2.INTER_AREA)
    bg = current
    if bg is None:
        raise RenderError("decode", "video yielded no frames")
    final = heatmap.cumulative_frame(points, bg, sigma, cfg.darken_factor)
    for _ in range(hold_frames):
        yield final


def render_heatmap_video(
    source_path: str | os.PathLike,
    session: model.GazeSession,
    cfg: RenderConfig,
    out_dir: str | os.PathLike,
    folder_mode: bool | None = None,
    progress=None,
) -> RenderResult:
    """Full pipeline: decode, heat, overlay, cumulative hold, encode + echo.

    ``folder_mode`` defaults to whatever the source uses. Deterministic in
    frame-folder mode: identical inputs yield byte-identical frame files.
    """
    source = open_frame_source(source_path)
    if folder_mode is None:
        folder_mode = isinstance(source, FolderFrameSource)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    stem = Path(source_path).stem if not Path(source_path).is_dir() else Path(source_path).name
    base = f"{stem}_{session.user_id}_heatmap"
    w, h = working_dims(source.width, source.height, cfg.working_width)
    n_total = heatmap.frame_count(source.frame_count / source.fps, cfg.fps) + round(
        cfg.hold_seconds * cfg.fps
    )
    if folder_mode:
        sink = FolderFrameSink(out_dir / base, cfg.fps, w, h)
    else:
        sink = VideoFileSink(out_dir / f"{base}.mp4", cfg.fps, w, h)
    try:
        written = 0
        for frame in render_frames(source, session.points, cfg):
            sink.write(frame)
            written += 1
            if progress is not None:
                progress(written / n_total)
    finally:
        sink.close()
    echo_path = out_dir / f"{base}.json"
    echo_path.write_bytes(model.write_session(session))
    return RenderResult(
        output_path=sink.path,
        echo_path=echo_path,
        frame_total=written,
        width=w,
        height=h,
        fps=cfg.fps,
    )
