"""Operator command line: render, average, simulate, analyze, serve.

Exit codes are a stable scripting contract: 0 success, 1 processing
failure, 2 usage or input error.
"""

from __future__ import annotations

import argparse
import json
import sys
from dataclasses import replace
from pathlib import Path

from . import metrics, model, render, simulate
from .heatmap import RenderConfig, merge_sessions

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

VIDEO_EXTENSIONS = {".mp4", ".mov", ".avi", ".mkv", ".webm"}


def _add_render_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--fps", type=float, default=None, help="output frames per second")
    p.add_argument("--working-width", type=int, default=None)
    p.add_argument("--fade", type=float, default=None, help="fade duration in seconds")
    p.add_argument("--blur-sigma", type=float, default=None, help="blur sigma in pixels")
    p.add_argument("--darken", type=float, default=None, help="background darken factor")
    p.add_argument("--hold", type=float, default=None, help="cumulative frame hold seconds")
    p.add_argument("--out", default="~/Desktop/Heatmap", help="output folder")


def _render_config(args) -> RenderConfig:
    cfg = RenderConfig()
    updates = {}
    for flag, name in (
        ("fps", "fps"),
        ("working_width", "working_width"),
        ("fade", "fade_duration_s"),
        ("blur_sigma", "blur_sigma_px"),
        ("darken", "darken_factor"),
        ("hold", "hold_seconds"),
    ):
        v = getattr(args, flag, None)
        if v is not None:
            updates[name] = v
    return replace(cfg, **updates) if updates else cfg


def _out_dir(args) -> Path:
    return Path(args.out).expanduser()


def cmd_render(args) -> int:
    video = Path(args.video)
    gaze = Path(args.gaze)
    for p in (video, gaze):
        if not p.exists():
            print(f"error: no such file: {p}", file=sys.stderr)
            return EXIT_USAGE
    try:
        session = model.read_session(gaze.read_bytes(), duration_slack_s=1e9)
        result = render.render_heatmap_video(
            video, session, _render_config(args), _out_dir(args)
        )
    except (model.SessionParseError, model.SessionValidationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except render.RenderError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE
    print(result.output_path)
    print(result.echo_path)
    return EXIT_OK


def _collect_folder(folder: Path):
    videos = [p for p in sorted(folder.iterdir()) if p.suffix.lower() in VIDEO_EXTENSIONS]
    sessions = []
    for p in sorted(folder.glob("*.json")):
        sessions.append((p, model.read_session(p.read_bytes(), duration_slack_s=1e9)))
    return videos, sessions


def cmd_average(args) -> int:
    folder = Path(args.folder)
    if not folder.is_dir():
        print(f"error: no such folder: {folder}", file=sys.stderr)
        return EXIT_USAGE
    try:
        videos, sessions = _collect_folder(folder)
    except (model.SessionParseError, model.SessionValidationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    if len(videos) != 1:
        print(f"error: expected exactly one video in {folder}, found {len(videos)}", file=sys.stderr)
        return EXIT_USAGE
    if not sessions:
        print(f"error: no session files in {folder}", file=sys.stderr)
        return EXIT_USAGE
    video = videos[0]
    offenders = [str(p) for p, s in sessions if s.video_name != video.name]
    if offenders:
        print(
            "error: sessions naming a different video: " + ", ".join(offenders),
            file=sys.stderr,
        )
        return EXIT_USAGE
    try:
        points = merge_sessions([s for _, s in sessions])
        merged = model.GazeSession(
            user_id="avg",
            click_method=sessions[0][1].click_method,
            mode="video",
            video_name=video.name,
            points=tuple(points),
        )
        result = render.render_heatmap_video(
            video, merged, _render_config(args), _out_dir(args)
        )
    except (ValueError, render.RenderError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_FAILURE
    print(result.output_path)
    return EXIT_OK


def cmd_simulate(args) -> int:
    try:
        session = simulate.simulate_session(
            method=args.method,
            duration_s=args.duration,
            seed=args.seed,
            video_name=args.video_name,
        )
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    out_dir = _out_dir(args)
    out_dir.mkdir(parents=True, exist_ok=True)
    out = out_dir / f"{session.user_id}.json"
    out.write_bytes(model.write_session(session))
    # sidecar config echo for reproducibility
    sidecar = out_dir / f"{session.user_id}.config.json"
    sidecar.write_text(
        json.dumps(
            {
                "method": args.method,
                "duration_s": args.duration,
                "seed": args.seed,
                "video_name": args.video_name,
            },
            sort_keys=True,
            indent=2,
        )
    )
    print(out)
    return EXIT_OK


def cmd_analyze(args) -> int:
    folder = Path(args.folder)
    if not folder.is_dir():
        print(f"error: no such folder: {folder}", file=sys.stderr)
        return EXIT_USAGE
    sessions = []
    for p in sorted(folder.glob("*.json")):
        if p.name.endswith(".config.json"):
            continue
        try:
            sessions.append(model.read_session(p.read_bytes(), duration_slack_s=1e9))
        except (model.SessionParseError, model.SessionValidationError) as e:
            print(f"error: {p}: {e}", file=sys.stderr)
            return EXIT_USAGE
    if not sessions:
        print(f"error: no session files in {folder}", file=sys.stderr)
        return EXIT_USAGE
    cells = metrics.group_summary(sessions)
    per_session = []
    for s in sessions:
        st = metrics.session_click_stats(s)
        per_session.append(
            {
                "user_id": s.user_id,
                "video": s.video_name,
                "total_clicks": st.total_clicks,
                "mean_cps": st.mean_cps,
                "mean_interval_s": st.mean_interval_s,
                "median_interval_s": st.median_interval_s,
            }
        )
    if args.json:
        print(json.dumps({"cells": cells, "sessions": per_session}, sort_keys=True, indent=2))
    else:
        print("average total clicks by method/video:")
        for k, v in cells.items():
            print(f"  {k}: {v:.1f}")
        print("per-session stats:")
        for row in per_session:
            cps = f"{row['mean_cps']:.2f}" if row["mean_cps"] is not None else "-"
            print(f"  {row['user_id']} [{row['video']}]: {row['total_clicks']} clicks, {cps} cps")
    return EXIT_OK


def cmd_serve(args) -> int:
    from . import service

    cfg = service.load_config(
        config_file=args.config,
        port=args.port,
        output_dir=args.out,
        worker_count=args.workers,
        delay_offset_s=args.delay_offset,
    )
    print(f"serving on port {cfg.port}, output folder {cfg.output_path}")
    service.serve(cfg)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="itrace", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("render", help="render a heatmap video for one session")
    p.add_argument("video", help="source video file or frame folder")
    p.add_argument("gaze", help="gaze session file")
    _add_render_flags(p)
    p.set_defaults(func=cmd_render)

    p = sub.add_parser("average", help="averaged heatmap from a folder of sessions")
    p.add_argument("folder", help="folder with one video and N session files")
    _add_render_flags(p)
    p.set_defaults(func=cmd_average)

    p = sub.add_parser("simulate", help="generate a synthetic gaze session")
    p.add_argument("--method", choices=("turbo", "dwell", "pinch"), required=True)
    p.add_argument("--duration", type=float, default=60.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--video-name", default="simulated.mp4")
    p.add_argument("--out", default="~/Desktop/Heatmap")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("analyze", help="metrics report over a folder of sessions")
    p.add_argument("folder")
    p.add_argument("--json", action="store_true", help="machine-readable output")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("serve", help="run the session service")
    p.add_argument("--config", default=None, help="JSON config file")
    p.add_argument("--port", type=int, default=None)
    p.add_argument("--out", default=None, help="output folder")
    p.add_argument("--workers", type=int, default=None)
    p.add_argument("--delay-offset", type=float, default=None)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
