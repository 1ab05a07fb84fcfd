"""Command-line driver: single-video evaluation, pair-sheet batch runs,
serving the HTTP API, archive export, and redaction.

Exit codes: 0 all requested work completed, 1 one or more runs failed,
2 usage error. stdout carries only the report table (or exported JSON);
diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import socket
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

from .archive import ArchiveStore
from .chain import EvaluationSpec, FrameParams
from .errors import PipelineError, VidaasError
from .gateway import build_gateway
from .pipeline import PipelineConfig, run_pipeline
from .rubric import Modality, MultimodalMode, load_pair_sheet, parse_rubric

logger = logging.getLogger(__name__)

_MODE_FLAGS = {"video-only": MultimodalMode.VIDEO_ONLY,
               "video-audio": MultimodalMode.VIDEO_AUDIO}


def _default_archive() -> str:
    return os.environ.get("VIDAAS_ARCHIVE_PATH", "./vidaas-archive.sqlite")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vidaas",
                                     description="Rubric-based observational video assessment")
    sub = parser.add_subparsers(dest="command", required=True)

    p_eval = sub.add_parser("eval", help="evaluate one video against a rubric")
    p_eval.add_argument("--video", required=True)
    p_eval.add_argument("--rubric", required=True, help="path to the video rubric text")
    p_eval.add_argument("--audio-rubric", help="path to the audio rubric text")
    p_eval.add_argument("--mode", choices=sorted(_MODE_FLAGS), default="video-only")
    p_eval.add_argument("--frames", type=int, default=12)
    p_eval.add_argument("--batch-size", type=int, default=6)
    p_eval.add_argument("--max-dim", type=int, default=768)
    p_eval.add_argument("--subject", default="anonymous")
    p_eval.add_argument("--provider", choices=["mock", "live"], default="mock")
    p_eval.add_argument("--out", default="./vidaas-report.json")
    p_eval.add_argument("--archive", default=_default_archive())

    p_batch = sub.add_parser("batch", help="evaluate every pair in a pair sheet")
    p_batch.add_argument("--sheet", required=True)
    p_batch.add_argument("--parallel", type=int, default=1)
    p_batch.add_argument("--provider", choices=["mock", "live"], default="mock")
    p_batch.add_argument("--out", default="./vidaas-report.json")
    p_batch.add_argument("--archive", default=_default_archive())

    p_serve = sub.add_parser("serve", help="run the HTTP job service")
    p_serve.add_argument("--listen", default=os.environ.get("VIDAAS_LISTEN", "127.0.0.1:8000"))
    p_serve.add_argument("--workers", type=int,
                         default=int(os.environ.get("VIDAAS_WORKERS", "2")))
    p_serve.add_argument("--archive", default=_default_archive())
    p_serve.add_argument("--provider", choices=["mock", "live"], default="mock")

    p_export = sub.add_parser("export", help="export archived records as JSON")
    p_export.add_argument("--subject", required=False)
    p_export.add_argument("--format", choices=["json"], default="json")
    p_export.add_argument("--with-media", action="store_true")
    p_export.add_argument("--archive", default=_default_archive())

    p_redact = sub.add_parser("redact", help="irreversibly pseudonymize a subject")
    p_redact.add_argument("--subject", required=True)
    p_redact.add_argument("--archive", default=_default_archive())
    return parser


# ---------------------------------------------------------------- reporting

def _scores_dict(record) -> dict:
    return {"entries": [{"ordinal": e.ordinal, "score": e.score, "rationale": e.rationale}
                        for e in record.final.scores.entries],
            "overall": record.final.scores.overall}


def _run_one(name: str, video: Path, spec: EvaluationSpec, gw, store: ArchiveStore) -> dict:
    started = time.monotonic()
    try:
        record = run_pipeline(video, spec, gw)
        record_id = store.save_record(record)
        return {"name": name, "record_id": record_id, "status": "complete",
                "error": None, "scores": _scores_dict(record),
                "wall_time_s": round(time.monotonic() - started, 3)}
    except (VidaasError, OSError) as exc:
        stage = getattr(exc, "stage", None)
        print(f"[vidaas] {name}: FAILED"
              + (f" at stage '{stage}'" if stage else "") + f": {exc}", file=sys.stderr)
        return {"name": name, "record_id": None, "status": "failed",
                "error": {"stage": stage, "message": str(exc)}, "scores": None,
                "wall_time_s": round(time.monotonic() - started, 3)}


def _make_report(rows: list[dict]) -> dict:
    successes = [r for r in rows if r["status"] == "complete"]
    mean_overall = (round(sum(r["scores"]["overall"] for r in successes) / len(successes), 2)
                    if successes else None)
    return {"pairs": rows,
            "aggregate": {"count": len(rows), "failures": len(rows) - len(successes),
                          "mean_overall": mean_overall}}


def _print_table(report: dict):
    rows = report["pairs"]
    name_w = max([len(r["name"]) for r in rows] + [4])
    print(f"{'name':<{name_w}}  {'status':<8}  {'overall':<7}  scores")
    for r in rows:
        if r["scores"] is not None:
            overall = f"{r['scores']['overall']:.1f}"
            scores = ",".join(str(e["score"]) for e in r["scores"]["entries"])
        else:
            overall, scores = "-", "-"
        print(f"{r['name']:<{name_w}}  {r['status']:<8}  {overall:<7}  {scores}")
    agg = report["aggregate"]
    mean = "-" if agg["mean_overall"] is None else f"{agg['mean_overall']:.2f}"
    print(f"{len(rows)} pair(s), {agg['failures']} failure(s), mean overall {mean}")


def _write_report(report: dict, out: str):
    Path(out).write_text(json.dumps(report, indent=2, ensure_ascii=False) + "\n", "utf-8")
    print(f"[vidaas] report written to {out}", file=sys.stderr)


# ---------------------------------------------------------------- commands

def cmd_eval(args) -> int:
    video = Path(args.video)
    rubric_path = Path(args.rubric)
    if not video.exists():
        print(f"[vidaas] video not found: {video}", file=sys.stderr)
        return 2
    if not rubric_path.exists():
        print(f"[vidaas] rubric not found: {rubric_path}", file=sys.stderr)
        return 2
    mode = _MODE_FLAGS[args.mode]
    audio_rubric = None
    if mode is MultimodalMode.VIDEO_AUDIO:
        if not args.audio_rubric:
            print("[vidaas] --mode video-audio requires --audio-rubric", file=sys.stderr)
            return 2
        audio_path = Path(args.audio_rubric)
        if not audio_path.exists():
            print(f"[vidaas] audio rubric not found: {audio_path}", file=sys.stderr)
            return 2
        audio_rubric = parse_rubric(audio_path.read_text("utf-8"), Modality.AUDIO)
    try:
        spec = EvaluationSpec(
            video_rubric=parse_rubric(rubric_path.read_text("utf-8"), Modality.VIDEO),
            audio_rubric=audio_rubric, mode=mode,
            frame_params=FrameParams(args.frames, args.batch_size, args.max_dim),
            subject_id=args.subject)
    except (VidaasError, ValueError) as exc:
        print(f"[vidaas] invalid arguments: {exc}", file=sys.stderr)
        return 2
    gw = build_gateway(args.provider)
    store = ArchiveStore(args.archive)
    rows = [_run_one(video.stem, video, spec, gw, store)]
    report = _make_report(rows)
    _write_report(report, args.out)
    _print_table(report)
    return 0 if report["aggregate"]["failures"] == 0 else 1


def cmd_batch(args) -> int:
    sheet_path = Path(args.sheet)
    if not sheet_path.exists():
        print(f"[vidaas] pair sheet not found: {sheet_path}", file=sys.stderr)
        return 2
    try:
        sheet = load_pair_sheet(sheet_path.read_bytes())
    except VidaasError as exc:
        print(f"[vidaas] bad pair sheet: {exc}", file=sys.stderr)
        return 2
    if not sheet.pairs:
        print("[vidaas] pair sheet has no pairs; nothing to do", file=sys.stderr)
    if args.parallel < 1:
        print("[vidaas] --parallel must be >= 1", file=sys.stderr)
        return 2
    gw = build_gateway(args.provider)
    store = ArchiveStore(args.archive)

    def run_pair(pair):
        spec = EvaluationSpec(video_rubric=pair.video_rubric, audio_rubric=pair.audio_rubric,
                              mode=pair.mode, subject_id=pair.name)
        return _run_one(pair.name, Path(pair.video_path), spec, gw, store)

    if args.parallel == 1:
        rows = [run_pair(p) for p in sheet.pairs]
    else:
        with ThreadPoolExecutor(max_workers=args.parallel) as pool:
            rows = list(pool.map(run_pair, sheet.pairs))
    report = _make_report(rows)
    _write_report(report, args.out)
    _print_table(report)
    return 0 if report["aggregate"]["failures"] == 0 else 1


def cmd_serve(args) -> int:
    import uvicorn

    from .pipeline import PipelineConfig
    from .service import ServiceConfig, create_app

    host, _, port_text = args.listen.rpartition(":")
    if not host or not port_text.isdigit():
        print(f"[vidaas] --listen must look like HOST:PORT, got '{args.listen}'", file=sys.stderr)
        return 2
    archive_path = Path(args.archive)
    config = ServiceConfig(archive_path=archive_path,
                           upload_dir=archive_path.parent / "vidaas-uploads",
                           gateway=build_gateway(args.provider),
                           worker_pool_size=args.workers,
                           pipeline=PipelineConfig())
    app = create_app(config)
    try:
        sock = socket.create_server((host, int(port_text)))
    except OSError as exc:
        print(f"[vidaas] cannot bind {args.listen}: {exc}", file=sys.stderr)
        return 1
    bound = sock.getsockname()
    print(f"listening on http://{bound[0]}:{bound[1]}", flush=True)
    server = uvicorn.Server(uvicorn.Config(app, log_level="warning"))
    try:
        server.run(sockets=[sock])
    except KeyboardInterrupt:
        pass  # uvicorn re-raises the captured SIGINT after a graceful stop
    return 0


def cmd_export(args) -> int:
    store = ArchiveStore(args.archive)
    docs = store.export_records(subject_id=args.subject, with_media=args.with_media)
    json.dump(docs, sys.stdout, indent=2, ensure_ascii=False)
    print()
    return 0


def cmd_redact(args) -> int:
    store = ArchiveStore(args.archive)
    count = store.redact_subject(args.subject)
    print(json.dumps({"subject_id": args.subject, "redacted": count}))
    return 0


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    handlers = {"eval": cmd_eval, "batch": cmd_batch, "serve": cmd_serve,
                "export": cmd_export, "redact": cmd_redact}
    return handlers[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
