"""Network-facing session service.

Accepts gaze-session uploads over HTTP, renders heatmap videos either
blocking or as background jobs, drives the spatial-mode recorder, and
announces itself over mDNS. The job registry is in-memory by design; the
only state surviving a restart is the output folder.
"""

from __future__ import annotations

import json
import math
import os
import queue
import shutil
import threading
import time
import uuid
from dataclasses import dataclass, field, asdict
from pathlib import Path
from typing import Optional

import cv2
import numpy as np
from fastapi import FastAPI, File, Form, HTTPException, UploadFile
from fastapi.responses import FileResponse, JSONResponse

from . import discovery, heatmap, model, render

DEFAULT_OUTPUT_DIR = "~/Desktop/Heatmap"


@dataclass
class ServiceConfig:
    port: int = 8080
    output_dir: str = DEFAULT_OUTPUT_DIR
    worker_count: int = 1
    recorder_backend: str = "mock_synthetic"  # or "external_command"
    recorder_command: str = ""
    delay_offset_s: float = 0.0
    crop_top_px: int = 0
    crop_bottom_px: int = 0
    blocking_timeout_s: float = 300.0
    instance_name: str = "itrace"
    announce: bool = True
    render: heatmap.RenderConfig = field(default_factory=heatmap.RenderConfig)
    mock_fps: float = 10.0
    mock_width: int = 320
    mock_height: int = 240

    @property
    def output_path(self) -> Path:
        return Path(os.path.expanduser(self.output_dir))


_ENV_FIELDS = {
    "ITRACE_PORT": ("port", int),
    "ITRACE_OUTPUT_DIR": ("output_dir", str),
    "ITRACE_WORKER_COUNT": ("worker_count", int),
    "ITRACE_RECORDER_BACKEND": ("recorder_backend", str),
    "ITRACE_RECORDER_COMMAND": ("recorder_command", str),
    "ITRACE_DELAY_OFFSET_S": ("delay_offset_s", float),
    "ITRACE_CROP_TOP_PX": ("crop_top_px", int),
    "ITRACE_CROP_BOTTOM_PX": ("crop_bottom_px", int),
    "ITRACE_BLOCKING_TIMEOUT_S": ("blocking_timeout_s", float),
    "ITRACE_INSTANCE_NAME": ("instance_name", str),
}


def load_config(
    config_file: str | os.PathLike | None = None,
    env: Optional[dict] = None,
    **overrides,
) -> ServiceConfig:
    """Precedence: explicit overrides > environment > file > defaults."""
    values: dict = {}
    render_values: dict = {}
    if config_file is not None:
        doc = json.loads(Path(config_file).read_text())
        render_values.update(doc.pop("render", {}))
        values.update(doc)
    env = os.environ if env is None else env
    for var, (name, cast) in _ENV_FIELDS.items():
        if var in env:
            values[name] = cast(env[var])
    values.update({k: v for k, v in overrides.items() if v is not None})
    render_overrides = values.pop("render", None)
    if isinstance(render_overrides, heatmap.RenderConfig):
        return ServiceConfig(**values, render=render_overrides)
    if render_overrides:
        render_values.update(render_overrides)
    return ServiceConfig(**values, render=heatmap.RenderConfig(**render_values))


@dataclass
class RenderJob:
    job_id: str
    state: str = "queued"  # queued -> running -> done | failed
    progress: float = 0.0
    result_path: Optional[str] = None
    error_message: Optional[str] = None
    dropped_points: list[int] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "job_id": self.job_id,
            "state": self.state,
            "progress": round(self.progress, 6),
            "result_path": self.result_path,
            "error_message": self.error_message,
            "dropped_points": self.dropped_points,
        }


class _JobRunner:
    """FIFO job queue with a fixed pool of render workers."""

    def __init__(self, worker_count: int):
        self._jobs: dict[str, RenderJob] = {}
        self._tasks: queue.Queue = queue.Queue()
        self._lock = threading.Lock()
        self._events: dict[str, threading.Event] = {}
        self._workers = [
            threading.Thread(target=self._work, daemon=True) for _ in range(worker_count)
        ]
        for w in self._workers:
            w.start()

    def submit(self, fn) -> RenderJob:
        job = RenderJob(job_id=uuid.uuid4().hex[:12])
        with self._lock:
            self._jobs[job.job_id] = job
            self._events[job.job_id] = threading.Event()
        self._tasks.put((job, fn))
        return job

    def get(self, job_id: str) -> RenderJob:
        with self._lock:
            job = self._jobs.get(job_id)
        if job is None:
            raise KeyError(job_id)
        return job

    def wait(self, job_id: str, timeout: float) -> bool:
        return self._events[job_id].wait(timeout)

    def _progress(self, job: RenderJob, fraction: float) -> None:
        with self._lock:
            job.progress = max(job.progress, min(1.0, fraction))

    def _work(self) -> None:
        while True:
            job, fn = self._tasks.get()
            with self._lock:
                job.state = "running"
            try:
                result_path = fn(lambda frac: self._progress(job, frac))
                with self._lock:
                    job.progress = 1.0
                    job.result_path = str(result_path)
                    job.state = "done"
            except Exception as e:  # job failure is a reportable state
                with self._lock:
                    job.error_message = str(e)
                    job.state = "failed"
            finally:
                self._events[job.job_id].set()
                self._tasks.task_done()


class MockRecorder:
    """Deterministic synthetic screen recorder for the spatial path.

    Synthesizes a test-pattern frame folder at stop time: a gradient
    background with the frame timestamp burned in.
    """

    def __init__(self, fps: float, width: int, height: int):
        self.fps = fps
        self.width = width
        self.height = height

    def record(self, duration_s: float, out_folder: Path) -> Path:
        n = max(1, int(math.ceil(duration_s * self.fps)))
        sink = render.FolderFrameSink(out_folder, self.fps, self.width, self.height)
        xs = np.linspace(0, 255, self.width, dtype=np.uint8)
        base = np.broadcast_to(xs, (self.height, self.width)).copy()
        for i in range(n):
            frame = np.stack([base, np.full_like(base, 64), base[::-1]], axis=-1)
            cv2.putText(
                frame,
                f"t={i / self.fps:08.3f}",
                (8, self.height - 12),
                cv2.FONT_HERSHEY_SIMPLEX,
                0.5,
                (255, 255, 255),
                1,
            )
            sink.write(frame)
        sink.close()
        return out_folder


class ExternalCommandRecorder:
    """Runs a configured capture command; the command must write a video
    file at the path given as its last argument."""

    def __init__(self, command: str):
        if not command:
            raise ValueError("recorder_command not configured")
        self.command = command
        self._proc = None
        self._out: Optional[Path] = None

    def start(self, out_path: Path) -> None:
        import subprocess

        self._out = out_path
        self._proc = subprocess.Popen(self.command.split() + [str(out_path)])

    def stop(self) -> Path:
        if self._proc is None:
            raise RuntimeError("recorder not started")
        self._proc.terminate()
        self._proc.wait(timeout=30)
        if self._out is None or not self._out.exists():
            raise RuntimeError("recorder produced no output")
        return self._out


def render_dots(dots: list[tuple[float, float]], width: int, height: int, radius: int = 6) -> np.ndarray:
    """Grayscale frame with a filled dot at each normalized coordinate."""
    frame = np.zeros((height, width), dtype=np.uint8)
    for x, y in dots:
        px, py = heatmap.point_pixel(x, y, width, height)
        cv2.circle(frame, (px, py), radius, 255, -1)
    return frame


def alignment_report(
    dots: list[tuple[float, float]],
    reference: np.ndarray,
    radius: int = 6,
) -> dict:
    """Compare server-rendered dot positions against a reference frame.

    For each expected dot, the intensity centroid of the reference within
    a local search window gives the observed position; the report lists
    per-dot offsets and their maximum, in pixels.
    """
    height, width = reference.shape[:2]
    if reference.ndim == 3:
        reference = reference.mean(axis=2)
    offsets = []
    search = radius * 4
    for x, y in dots:
        px, py = heatmap.point_pixel(x, y, width, height)
        x0, x1 = max(0, px - search), min(width, px + search + 1)
        y0, y1 = max(0, py - search), min(height, py + search + 1)
        window = reference[y0:y1, x0:x1].astype(np.float64)
        mass = window.sum()
        if mass == 0:
            offsets.append({"x": x, "y": y, "offset_px": None})
            continue
        ys, xs = np.mgrid[y0:y1, x0:x1]
        cx = float((xs * window).sum() / mass)
        cy = float((ys * window).sum() / mass)
        offsets.append(
            {"x": x, "y": y, "offset_px": math.hypot(cx - px, cy - py)}
        )
    measured = [o["offset_px"] for o in offsets if o["offset_px"] is not None]
    return {
        "dots": offsets,
        "max_offset_px": max(measured) if measured else None,
    }


def create_app(cfg: ServiceConfig | None = None) -> FastAPI:
    cfg = cfg or ServiceConfig()
    app = FastAPI(title="itrace session service")
    runner = _JobRunner(cfg.worker_count)
    out_root = cfg.output_path
    out_root.mkdir(parents=True, exist_ok=True)

    recorder_lock = threading.Lock()
    recorder_state: dict = {"active": None}

    app.state.config = cfg
    app.state.runner = runner

    def _spatial_render_cfg() -> heatmap.RenderConfig:
        from dataclasses import replace

        return replace(
            cfg.render,
            delay_offset_s=cfg.delay_offset_s,
            crop_top_px=cfg.crop_top_px,
            crop_bottom_px=cfg.crop_bottom_px,
        )

    @app.get("/health")
    def health():
        return {"status": "ok", "api": 1}

    @app.post("/api/v1/heatmap/video")
    async def submit_video_session(
        video: UploadFile = File(...),
        gaze: UploadFile = File(...),
        background: str = Form("false"),
    ):
        gaze_bytes = await gaze.read()
        try:
            session = model.read_session(
                gaze_bytes, duration_slack_s=cfg.render.fade_duration_s
            )
        except (model.SessionParseError, model.SessionValidationError) as e:
            raise HTTPException(status_code=422, detail=str(e))

        job_dir = out_root / "jobs" / uuid.uuid4().hex[:12]
        job_dir.mkdir(parents=True, exist_ok=True)
        video_path = job_dir / (Path(video.filename or "upload.mp4").name)
        video_path.write_bytes(await video.read())
        try:
            render.open_frame_source(video_path)
        except render.RenderError as e:
            shutil.rmtree(job_dir, ignore_errors=True)
            raise HTTPException(status_code=415, detail=str(e))

        def run(progress):
            result = render.render_heatmap_video(
                video_path, session, cfg.render, job_dir, folder_mode=False,
                progress=progress,
            )
            return result.output_path

        job = runner.submit(run)
        if background.lower() == "true":
            return JSONResponse(status_code=202, content=job.as_dict())
        if runner.wait(job.job_id, cfg.blocking_timeout_s):
            job = runner.get(job.job_id)
            if job.state == "failed":
                raise HTTPException(status_code=500, detail=job.error_message)
            return FileResponse(job.result_path, media_type="video/mp4")
        # blocking wait capped; degrade to job polling
        return JSONResponse(status_code=202, content=runner.get(job.job_id).as_dict())

    @app.get("/api/v1/jobs/{job_id}")
    def job_status(job_id: str):
        try:
            return runner.get(job_id).as_dict()
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id!r}")

    @app.get("/api/v1/jobs/{job_id}/result")
    def job_result(job_id: str):
        try:
            job = runner.get(job_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown job {job_id!r}")
        if job.state == "failed":
            raise HTTPException(status_code=500, detail=job.error_message)
        if job.state != "done":
            raise HTTPException(status_code=409, detail=f"job is {job.state}")
        return FileResponse(job.result_path, media_type="video/mp4")

    @app.post("/api/v1/spatial/start")
    def spatial_start():
        with recorder_lock:
            if recorder_state["active"] is not None:
                raise HTTPException(status_code=409, detail="recording already active")
            recording_id = uuid.uuid4().hex[:12]
            handle = {
                "recording_id": recording_id,
                "started_at": time.monotonic(),
                "external": None,
            }
            if cfg.recorder_backend == "external_command":
                rec = ExternalCommandRecorder(cfg.recorder_command)
                rec.start(out_root / "recordings" / f"{recording_id}.mp4")
                handle["external"] = rec
            recorder_state["active"] = handle
        return {"recording_id": recording_id, "started_at": handle["started_at"]}

    @app.post("/api/v1/spatial/stop")
    async def spatial_stop(payload: dict):
        with recorder_lock:
            handle = recorder_state["active"]
            if handle is None:
                raise HTTPException(status_code=409, detail="no active recording")
            recorder_state["active"] = None
        duration = time.monotonic() - handle["started_at"]
        try:
            session = model.validate_session(model.session_from_dict(payload))
        except (model.SessionParseError, model.SessionValidationError) as e:
            raise HTTPException(status_code=422, detail=str(e))

        if handle["external"] is not None:
            footage = handle["external"].stop()
        else:
            rec = MockRecorder(cfg.mock_fps, cfg.mock_width, cfg.mock_height)
            folder = out_root / "recordings" / handle["recording_id"]
            footage = rec.record(max(duration, 1.0 / cfg.mock_fps), folder)

        spatial_cfg = _spatial_render_cfg()
        source = render.open_frame_source(footage)
        kept, dropped = heatmap.remap_spatial(
            session.points, spatial_cfg, source.height
        )
        from dataclasses import replace as dc_replace

        remapped = dc_replace(session, points=tuple(kept), mode="spatial")
        job_dir = out_root / "jobs" / uuid.uuid4().hex[:12]
        job_dir.mkdir(parents=True, exist_ok=True)

        def run(progress):
            result = render.render_heatmap_video(
                footage, remapped, spatial_cfg, job_dir, folder_mode=False,
                progress=progress,
            )
            return result.output_path

        job = runner.submit(run)
        job.dropped_points = list(dropped)
        return {"job_id": job.job_id, "dropped_points": list(dropped)}

    @app.post("/api/v1/alignment/check")
    async def alignment_check(
        spec: str = Form(...),
        reference: UploadFile | None = File(None),
    ):
        try:
            doc = json.loads(spec)
            dots = [(float(d["x"]), float(d["y"])) for d in doc["dots"]]
            width = int(doc["width"])
            height = int(doc["height"])
        except (KeyError, ValueError, TypeError, json.JSONDecodeError) as e:
            raise HTTPException(status_code=422, detail=f"bad alignment spec: {e}")
        if reference is None:
            ref = render_dots(dots, width, height)
        else:
            raw = np.frombuffer(await reference.read(), dtype=np.uint8)
            ref = cv2.imdecode(raw, cv2.IMREAD_GRAYSCALE)
            if ref is None:
                raise HTTPException(status_code=415, detail="undecodable reference frame")
            if ref.shape != (height, width):
                raise HTTPException(status_code=422, detail="reference dimension mismatch")
        return alignment_report(dots, ref)

    return app


def serve(cfg: ServiceConfig) -> None:
    """Run the service until interrupted, with optional mDNS announcement."""
    import uvicorn

    app = create_app(cfg)
    announcer = None
    if cfg.announce:
        announcer = discovery.Announcer(cfg.instance_name, cfg.port)
        announcer.start()
    try:
        uvicorn.run(app, host="0.0.0.0", port=cfg.port, log_level="warning")
    finally:
        if announcer is not None:
            announcer.close()
