"""Core gaze data types and the canonical session file format.

Everything here is immutable after validation and safe to share across
threads. The on-disk format is UTF-8 JSON in canonical form: keys sorted,
floats written with 6 decimal digits, so re-serialization of a canonical
file is byte-identical.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from typing import Optional, Sequence

SCHEMA_VERSION = 1

CLICK_METHODS = ("pinch", "dwell", "controller", "simulated")
MODES = ("video", "spatial")


class SessionValidationError(ValueError):
    """A session violates a structural or range invariant."""


class SessionParseError(ValueError):
    """A session document could not be parsed or is missing fields."""


@dataclass(frozen=True)
class GazePoint:
    x: float  # fraction of frame width, [0, 1]
    y: float  # fraction of frame height, [0, 1]
    t: float  # seconds since session start

    def as_dict(self) -> dict:
        return {"x": self.x, "y": self.y, "t": self.t}


@dataclass(frozen=True)
class GazeSession:
    user_id: str
    click_method: str
    mode: str
    video_name: str
    points: tuple[GazePoint, ...]
    precision_score: Optional[float] = None
    video_duration_s: Optional[float] = None
    schema_version: int = SCHEMA_VERSION

    @property
    def total_clicks(self) -> int:
        return len(self.points)

    def timestamps(self) -> list[float]:
        return [p.t for p in self.points]


@dataclass(frozen=True)
class PrecisionAttempt:
    click_x: float
    click_y: float
    center_x: float
    center_y: float
    target_radius: float

    def __post_init__(self):
        if not self.target_radius > 0:
            raise ValueError("target_radius must be > 0")


def _check_point(p: GazePoint, index: int) -> None:
    for name, v in (("x", p.x), ("y", p.y)):
        if not math.isfinite(v) or not 0.0 <= v <= 1.0:
            raise SessionValidationError(f"point {index}: {name} out of range")
    if not math.isfinite(p.t) or p.t < 0.0:
        raise SessionValidationError(f"point {index}: t out of range")


def validate_session(session: GazeSession, duration_slack_s: float = 0.0) -> GazeSession:
    """Check all invariants and return a canonical session.

    Points are stably re-sorted by timestamp if needed. Empty point lists
    are valid (dwell control can legitimately produce zero clicks).
    """
    if session.schema_version != SCHEMA_VERSION:
        raise SessionValidationError(
            f"unsupported schema_version {session.schema_version}"
        )
    if session.click_method not in CLICK_METHODS:
        raise SessionValidationError(f"unknown click_method {session.click_method!r}")
    if session.mode not in MODES:
        raise SessionValidationError(f"unknown mode {session.mode!r}")
    if session.precision_score is not None and not 0.0 <= session.precision_score <= 100.0:
        raise SessionValidationError("precision_score out of [0, 100]")
    for i, p in enumerate(session.points):
        _check_point(p, i)
    if session.video_duration_s is not None:
        limit = session.video_duration_s + duration_slack_s
        for i, p in enumerate(session.points):
            if p.t > limit:
                raise SessionValidationError(
                    f"point {i}: t {p.t} exceeds video duration {limit}"
                )
    points = session.points
    if any(points[i].t > points[i + 1].t for i in range(len(points) - 1)):
        points = tuple(sorted(points, key=lambda p: p.t))
    return replace(session, points=points)


def normalize_click(pixel_x: float, pixel_y: float, viewport_w: float, viewport_h: float) -> tuple[float, float]:
    """Map viewport pixel coordinates to [0, 1] fractions, clamping edges."""
    if viewport_w <= 0 or viewport_h <= 0:
        raise ValueError("viewport dimensions must be positive")
    x = min(1.0, max(0.0, pixel_x / viewport_w))
    y = min(1.0, max(0.0, pixel_y / viewport_h))
    return x, y


def _fmt(v: Optional[float]):
    if v is None:
        return None
    # 6 decimal digits, then back through float so json prints the shortest
    # representation of the rounded value (canonical form).
    return float(f"{v:.6f}")


def session_to_dict(session: GazeSession) -> dict:
    return {
        "schema_version": session.schema_version,
        "user": {
            "id": session.user_id,
            "precision_score": _fmt(session.precision_score),
        },
        "click_method": session.click_method,
        "mode": session.mode,
        "video": {
            "name": session.video_name,
            "duration_s": _fmt(session.video_duration_s),
        },
        "points": [
            {"x": _fmt(p.x), "y": _fmt(p.y), "t": _fmt(p.t)} for p in session.points
        ],
    }


def write_session(session: GazeSession) -> bytes:
    """Serialize to canonical UTF-8 JSON (sorted keys, 6-decimal floats)."""
    return json.dumps(
        session_to_dict(session), sort_keys=True, separators=(",", ":")
    ).encode("utf-8")


def _require(doc: dict, key: str, where: str = "document"):
    if not isinstance(doc, dict) or key not in doc:
        raise SessionParseError(f"{where}: missing required field {key!r}")
    return doc[key]


def session_from_dict(doc: dict) -> GazeSession:
    version = _require(doc, "schema_version")
    if version != SCHEMA_VERSION:
        raise SessionParseError(f"unsupported schema_version {version!r}")
    user = _require(doc, "user")
    video = _require(doc, "video")
    raw_points = _require(doc, "points")
    if not isinstance(raw_points, list):
        raise SessionParseError("points: expected a list")
    points = []
    for i, rp in enumerate(raw_points):
        points.append(
            GazePoint(
                x=float(_require(rp, "x", f"point {i}")),
                y=float(_require(rp, "y", f"point {i}")),
                t=float(_require(rp, "t", f"point {i}")),
            )
        )
    return GazeSession(
        schema_version=version,
        user_id=str(_require(user, "id", "user")),
        precision_score=user.get("precision_score"),
        click_method=str(_require(doc, "click_method")),
        mode=str(_require(doc, "mode")),
        video_name=str(_require(video, "name", "video")),
        video_duration_s=video.get("duration_s"),
        points=tuple(points),
    )


def read_session(data: bytes, duration_slack_s: float = 0.0) -> GazeSession:
    """Parse and validate a session file."""
    try:
        doc = json.loads(data.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise SessionParseError(f"malformed session document: {e}") from e
    return validate_session(session_from_dict(doc), duration_slack_s=duration_slack_s)
