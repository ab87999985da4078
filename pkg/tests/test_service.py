import io
import json
import time

import cv2
import numpy as np
import pytest
from fastapi.testclient import TestClient

from itrace import model
from itrace.heatmap import RenderConfig
from itrace.service import (
    ServiceConfig,
    alignment_report,
    create_app,
    load_config,
    render_dots,
)

from conftest import make_session, make_video_file


@pytest.fixture
def client(tmp_path):
    cfg = ServiceConfig(
        output_dir=str(tmp_path / "out"),
        render=RenderConfig(fps=10.0, hold_seconds=0.5, working_width=64),
        delay_offset_s=0.4,
        mock_fps=5.0,
        mock_width=64,
        mock_height=48,
        announce=False,
    )
    with TestClient(create_app(cfg)) as c:
        yield c


def upload(client, video_bytes, session, background="false"):
    return client.post(
        "/api/v1/heatmap/video",
        files={
            "video": ("clip.mp4", video_bytes, "video/mp4"),
            "gaze": ("gaze.json", model.write_session(session), "application/json"),
        },
        data={"background": background},
    )


@pytest.fixture
def video_bytes(tmp_path):
    path = make_video_file(tmp_path / "clip.mp4", 20, fps=10.0)
    return path.read_bytes()


def test_health(client):
    r = client.get("/health")
    assert r.status_code == 200
    assert r.json() == {"status": "ok", "api": 1}


def test_blocking_upload_returns_video(client, video_bytes):
    session = make_session([(0.5, 0.5, 1.0)], video_name="clip.mp4")
    r = upload(client, video_bytes, session)
    assert r.status_code == 200
    assert r.headers["content-type"] == "video/mp4"
    assert len(r.content) > 0


def test_background_upload_lifecycle(client, video_bytes):
    session = make_session([(0.5, 0.5, 1.0)], video_name="clip.mp4")
    r = upload(client, video_bytes, session, background="true")
    assert r.status_code == 202
    job_id = r.json()["job_id"]
    deadline = time.time() + 60
    while time.time() < deadline:
        status = client.get(f"/api/v1/jobs/{job_id}").json()
        if status["state"] in ("done", "failed"):
            break
        time.sleep(0.1)
    assert status["state"] == "done"
    assert status["progress"] == 1.0
    result = client.get(f"/api/v1/jobs/{job_id}/result")
    assert result.status_code == 200
    assert len(result.content) > 0


def test_invalid_session_is_422_with_detail(client, video_bytes):
    bad = json.loads(model.write_session(make_session([(0.5, 0.5, 1.0)] * 4)).decode())
    bad["points"][3]["x"] = 1.2
    r = client.post(
        "/api/v1/heatmap/video",
        files={
            "video": ("clip.mp4", video_bytes, "video/mp4"),
            "gaze": ("gaze.json", json.dumps(bad).encode(), "application/json"),
        },
    )
    assert r.status_code == 422
    assert "point 3: x out of range" in r.json()["detail"]


def test_undecodable_video_is_415(client):
    session = make_session([], video_name="clip.mp4")
    r = upload(client, b"garbage bytes", session)
    assert r.status_code == 415


def test_unknown_job_is_404(client):
    assert client.get("/api/v1/jobs/nope").status_code == 404
    assert client.get("/api/v1/jobs/nope/result").status_code == 404


def test_echo_conserves_point_count(client, video_bytes, tmp_path):
    n = 25
    pts = [(0.5, 0.5, 0.1 * i) for i in range(n)]
    session = make_session(pts, video_name="clip.mp4")
    r = upload(client, video_bytes, session)
    assert r.status_code == 200
    echoes = list((tmp_path / "out").rglob("*_heatmap.json"))
    assert echoes
    echo = model.read_session(echoes[-1].read_bytes(), duration_slack_s=1e9)
    assert len(echo.points) == n


class TestSpatial:
    def test_start_stop_conflicts(self, client):
        r1 = client.post("/api/v1/spatial/start")
        assert r1.status_code == 200
        assert "recording_id" in r1.json()
        assert client.post("/api/v1/spatial/start").status_code == 409
        session = make_session([], video_name="spatial", mode="spatial")
        doc = json.loads(model.write_session(session).decode())
        assert client.post("/api/v1/spatial/stop", json=doc).status_code == 200
        assert client.post("/api/v1/spatial/stop", json=doc).status_code == 409

    def test_delay_compensation_drops_pre_start_point(self, client, tmp_path):
        client.post("/api/v1/spatial/start")
        time.sleep(1.1)
        session = make_session(
            [(0.5, 0.5, 0.3), (0.5, 0.5, 0.9)], video_name="spatial", mode="spatial"
        )
        doc = json.loads(model.write_session(session).decode())
        r = client.post("/api/v1/spatial/stop", json=doc)
        assert r.status_code == 200
        body = r.json()
        # delay offset 0.4: the t=0.3 point precedes recording start
        assert body["dropped_points"] == [0]
        job_id = body["job_id"]
        deadline = time.time() + 60
        while time.time() < deadline:
            status = client.get(f"/api/v1/jobs/{job_id}").json()
            if status["state"] in ("done", "failed"):
                break
            time.sleep(0.1)
        assert status["state"] == "done", status["error_message"]
        echoes = list((tmp_path / "out").rglob("*_heatmap.json"))
        echo = model.read_session(echoes[-1].read_bytes(), duration_slack_s=1e9)
        assert len(echo.points) == 1
        assert echo.points[0].t == pytest.approx(0.5)


class TestAlignment:
    def test_self_comparison_zero_offset(self, client):
        dots = [{"x": 0.25, "y": 0.25}, {"x": 0.75, "y": 0.5}]
        spec = {"dots": dots, "width": 128, "height": 96}
        ref = render_dots([(0.25, 0.25), (0.75, 0.5)], 128, 96)
        ok, png = cv2.imencode(".png", ref)
        assert ok
        r = client.post(
            "/api/v1/alignment/check",
            data={"spec": json.dumps(spec)},
            files={"reference": ("ref.png", png.tobytes(), "image/png")},
        )
        assert r.status_code == 200
        assert r.json()["max_offset_px"] == pytest.approx(0.0, abs=0.5)

    def test_shifted_reference_detected(self):
        dots = [(0.5, 0.5)]
        ref = render_dots([(0.5, 0.5)], 128, 96)
        shifted = np.roll(ref, 3, axis=1)  # 3 px to the right
        report = alignment_report(dots, shifted)
        assert report["max_offset_px"] == pytest.approx(3.0, abs=0.3)

    def test_empty_dot_list(self, client):
        r = client.post(
            "/api/v1/alignment/check",
            data={"spec": json.dumps({"dots": [], "width": 64, "height": 48})},
        )
        assert r.status_code == 200
        assert r.json() == {"dots": [], "max_offset_px": None}

    def test_dimension_mismatch_rejected(self, client):
        ref = render_dots([(0.5, 0.5)], 64, 64)
        ok, png = cv2.imencode(".png", ref)
        r = client.post(
            "/api/v1/alignment/check",
            data={"spec": json.dumps({"dots": [{"x": 0.5, "y": 0.5}], "width": 128, "height": 96})},
            files={"reference": ("ref.png", png.tobytes(), "image/png")},
        )
        assert r.status_code == 422


class TestConcurrency:
    def test_parallel_uploads_all_complete(self, tmp_path, video_bytes):
        cfg = ServiceConfig(
            output_dir=str(tmp_path / "out2"),
            render=RenderConfig(fps=10.0, hold_seconds=0.0, working_width=64),
            worker_count=2,
            announce=False,
        )
        with TestClient(create_app(cfg)) as client:
            job_ids = []
            for i in range(4):
                session = make_session(
                    [(0.5, 0.5, 1.0)], video_name="clip.mp4", user_id=f"user{i}"
                )
                r = upload(client, video_bytes, session, background="true")
                job_ids.append(r.json()["job_id"])
            deadline = time.time() + 120
            states = {}
            while time.time() < deadline:
                states = {
                    j: client.get(f"/api/v1/jobs/{j}").json()["state"] for j in job_ids
                }
                if all(s in ("done", "failed") for s in states.values()):
                    break
                time.sleep(0.2)
            assert all(s == "done" for s in states.values()), states
            results = {
                client.get(f"/api/v1/jobs/{j}").json()["result_path"] for j in job_ids
            }
            assert len(results) == 4  # unique job-scoped outputs


class TestConfig:
    def test_precedence_flags_env_file(self, tmp_path):
        cfg_file = tmp_path / "conf.json"
        cfg_file.write_text(json.dumps({"port": 1111, "worker_count": 3}))
        env = {"ITRACE_PORT": "2222"}
        cfg = load_config(cfg_file, env=env)
        assert cfg.port == 2222 and cfg.worker_count == 3
        cfg = load_config(cfg_file, env=env, port=3333)
        assert cfg.port == 3333

    def test_render_section(self, tmp_path):
        cfg_file = tmp_path / "conf.json"
        cfg_file.write_text(json.dumps({"render": {"fps": 15.0}}))
        assert load_config(cfg_file).render.fps == 15.0
