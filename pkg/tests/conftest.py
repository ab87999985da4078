import math

import cv2
import numpy as np
import pytest

from itrace.model import GazePoint, GazeSession


def make_frame_folder(folder, n_frames, fps=10.0, width=64, height=36, seed=0):
    """Deterministic synthetic source video in frame-folder form."""
    folder.mkdir(parents=True, exist_ok=True)
    (folder / "meta.txt").write_text(f"fps={fps:g}\nwidth={width}\nheight={height}\n")
    rng = np.random.default_rng(seed)
    for i in range(n_frames):
        frame = rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8)
        cv2.imwrite(str(folder / f"frame_{i:06d}.png"), frame)
    return folder


def make_video_file(path, n_frames, fps=10.0, width=64, height=36, seed=0):
    rng = np.random.default_rng(seed)
    writer = cv2.VideoWriter(
        str(path), cv2.VideoWriter_fourcc(*"mp4v"), fps, (width, height)
    )
    assert writer.isOpened()
    for _ in range(n_frames):
        writer.write(rng.integers(0, 256, size=(height, width, 3), dtype=np.uint8))
    writer.release()
    return path


def make_session(points, video_name="clip.mp4", user_id="u1", **kw):
    return GazeSession(
        user_id=user_id,
        click_method=kw.pop("click_method", "simulated"),
        mode=kw.pop("mode", "video"),
        video_name=video_name,
        points=tuple(GazePoint(*p) if isinstance(p, tuple) else p for p in points),
        **kw,
    )


@pytest.fixture
def small_folder_video(tmp_path):
    return make_frame_folder(tmp_path / "clip", n_frames=20, fps=10.0)
