"""HTTP job service: the three-step workflow with explicit human-in-the-loop
pauses, archive queries, and bounded-concurrency batch execution.

Jobs live in memory and advance through a strict state machine:
Created -> SnapshotsReady -> Evaluating -> Evaluated -> Summarizing -> Complete,
with any state able to fail. Wrong-state calls return 409 and never mutate the
job. Provider/stage failures surface as state "failed" with a stage-tagged
diagnostic in the job view, not as HTTP 5xx on polling endpoints.

Pipeline stages execute on one ThreadPoolExecutor of `worker_pool_size`
threads, which is the global bound on concurrently running stages. Interactive
steps 2 and 3 flip the job into its transitional state at request time and
complete asynchronously (poll the job view); batch jobs advance states only
inside their worker task, so a poller observes at most `worker_pool_size`
jobs in flight.
"""

from __future__ import annotations

import base64
import logging
import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor
from contextlib import asynccontextmanager
from dataclasses import dataclass, field as dc_field
from datetime import datetime
from enum import Enum
from pathlib import Path

from fastapi import FastAPI, Request, UploadFile
from fastapi.responses import JSONResponse
from pydantic import BaseModel

from . import chain, pipeline
from .archive import ArchiveStore
from .chain import EvaluationSpec, FrameParams
from .errors import (DuplicateName, EmptyRubric, InvalidPair, MalformedFullResponse,
                     MalformedSheet, NotFound, UndecodableMedia, UnknownRecord,
                     UnknownSubject, VidaasError)
from .gateway import Gateway, MockGateway
from .pipeline import PipelineConfig, SnapshotBundle
from .rubric import Modality, MultimodalMode, load_pair_sheet, parse_rubric
from .util import parse_utc, sha256_hex, utc_now

logger = logging.getLogger(__name__)


class JobState(str, Enum):
    CREATED = "created"
    SNAPSHOTS_READY = "snapshots_ready"
    EVALUATING = "evaluating"
    EVALUATED = "evaluated"
    SUMMARIZING = "summarizing"
    COMPLETE = "complete"
    FAILED = "failed"


LEGAL_TRANSITIONS: dict[JobState, set[JobState]] = {
    JobState.CREATED: {JobState.SNAPSHOTS_READY, JobState.FAILED},
    JobState.SNAPSHOTS_READY: {JobState.EVALUATING, JobState.FAILED},
    JobState.EVALUATING: {JobState.EVALUATED, JobState.FAILED},
    JobState.EVALUATED: {JobState.SUMMARIZING, JobState.FAILED},
    JobState.SUMMARIZING: {JobState.COMPLETE, JobState.FAILED},
    JobState.COMPLETE: set(),
    JobState.FAILED: set(),
}


class IllegalTransition(VidaasError):
    pass


@dataclass
class Job:
    job_id: str
    asset_path: Path
    asset_digest: str
    created_at: datetime
    auto: bool = False
    pair_name: str | None = None
    state: JobState = JobState.CREATED
    frame_params: FrameParams | None = None
    spec: EvaluationSpec | None = None
    bundle: SnapshotBundle | None = None
    partials: list | None = None
    full: chain.FullResponse | None = None
    final: chain.FinalEvaluation | None = None
    record_id: str | None = None
    error: dict | None = None
    claimed: bool = False  # step1 in progress; guards the Created state window
    lock: threading.Lock = dc_field(default_factory=threading.Lock)

    def advance(self, new_state: JobState, error: dict | None = None):
        """Transition under the job lock; programming errors fail loudly."""
        with self.lock:
            if new_state not in LEGAL_TRANSITIONS[self.state]:
                raise IllegalTransition(f"{self.state.value} -> {new_state.value}")
            self.state = new_state
            if error is not None:
                self.error = error

    def fail(self, stage: str, message: str):
        with self.lock:
            if self.state in (JobState.COMPLETE, JobState.FAILED):
                return
            self.state = JobState.FAILED
            self.error = {"stage": stage, "message": message}


@dataclass
class ServiceConfig:
    archive_path: Path
    upload_dir: Path
    gateway: Gateway = dc_field(default_factory=MockGateway)
    worker_pool_size: int = 2
    max_upload_bytes: int = 256 * 1024 * 1024
    pipeline: PipelineConfig = dc_field(default_factory=PipelineConfig)
    idempotency_window_s: float = 600.0


class SnapshotParams(BaseModel):
    requested_frames: int = 12
    batch_size: int = 6
    max_dim: int = 768


class EvaluateBody(BaseModel):
    mode: str
    video_rubric: str
    audio_rubric: str | None = None
    subject_id: str = "anonymous"
    notes: str | None = None


class EditBody(BaseModel):
    text: str


def _err(status: int, message: str) -> JSONResponse:
    return JSONResponse(status_code=status, content={"detail": message})


def _frame_view(bundle: SnapshotBundle) -> list[dict]:
    return [{
        "index": f.source_index,
        "timestamp": f.timestamp,
        "width": f.image.width,
        "height": f.image.height,
        "data_url": "data:image/jpeg;base64," + base64.b64encode(f.image.data).decode("ascii"),
    } for f in bundle.frame_set.frames]


def job_view(job: Job, include_media: bool = True) -> dict:
    with job.lock:
        view: dict = {
            "job_id": job.job_id,
            "state": job.state.value,
            "auto": job.auto,
            "pair_name": job.pair_name,
            "error": job.error,
            "record_id": job.record_id,
        }
        if job.frame_params is not None:
            view["frame_params"] = {"requested": job.frame_params.requested,
                                    "batch_size": job.frame_params.batch_size,
                                    "max_dim": job.frame_params.max_dim}
        if job.bundle is not None:
            view["transcript"] = None if job.bundle.transcript is None else job.bundle.transcript.text
            if include_media:
                view["frames"] = _frame_view(job.bundle)
        if job.spec is not None:
            view["mode"] = job.spec.mode.value
            view["subject_id"] = job.spec.subject_id
        if job.full is not None:
            view["full_response"] = {"text": chain.serialize_full_response(job.full),
                                     "edited": job.full.edited}
        if job.final is not None:
            view["final"] = {
                "narrative": job.final.narrative,
                "scores": {"entries": [{"ordinal": e.ordinal, "score": e.score,
                                        "rationale": e.rationale}
                                       for e in job.final.scores.entries],
                           "overall": job.final.scores.overall},
                "audio_scores": None if job.final.audio_scores is None else {
                    "entries": [{"ordinal": e.ordinal, "score": e.score,
                                 "rationale": e.rationale}
                                for e in job.final.audio_scores.entries],
                    "overall": job.final.audio_scores.overall},
            }
        return view


def create_app(config: ServiceConfig) -> FastAPI:
    config.upload_dir.mkdir(parents=True, exist_ok=True)
    store = ArchiveStore(config.archive_path)
    pool = ThreadPoolExecutor(max_workers=config.worker_pool_size,
                              thread_name_prefix="vidaas-worker")

    jobs: dict[str, Job] = {}
    jobs_lock = threading.Lock()
    upload_index: dict[str, tuple[str, float]] = {}

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        yield
        pool.shutdown(wait=False, cancel_futures=True)

    app = FastAPI(title="vidaas service", lifespan=lifespan)
    app.state.store = store
    app.state.jobs = jobs
    app.state.config = config

    def new_job(asset_path: Path, digest: str, auto: bool = False,
                pair_name: str | None = None) -> Job:
        job = Job(job_id=uuid.uuid4().hex[:12], asset_path=asset_path,
                  asset_digest=digest, created_at=utc_now(), auto=auto,
                  pair_name=pair_name)
        with jobs_lock:
            jobs[job.job_id] = job
        return job

    def get_job(job_id: str) -> Job | None:
        with jobs_lock:
            return jobs.get(job_id)

    # ------------------------------------------------------ stage executors

    def do_snapshots(job: Job, params: FrameParams):
        try:
            bundle = pipeline.prepare_snapshots(job.asset_path, params, config.gateway,
                                                config.pipeline, transcribe_when_audio=True)
        except Exception as exc:
            job.fail(getattr(exc, "stage", "snapshots"), str(exc))
            return
        with job.lock:
            job.bundle = bundle
            job.frame_params = params
        job.advance(JobState.SNAPSHOTS_READY)

    def do_evaluate(job: Job):
        try:
            partials = pipeline.evaluate(job.bundle, job.spec, config.gateway, config.pipeline)
            full = chain.assemble_full_response(partials)
        except Exception as exc:
            job.fail(getattr(exc, "stage", "evaluate"), str(exc))
            return
        with job.lock:
            job.partials = partials
            job.full = full
        job.advance(JobState.EVALUATED)

    def do_summarize(job: Job):
        try:
            final = chain.summarize(job.full, job.spec, config.gateway)
            record = pipeline.finalize_record(job.asset_path, job.spec, config.gateway,
                                              config.pipeline, job.bundle, job.partials,
                                              job.full, final)
            record_id = store.save_record(record)
        except Exception as exc:
            job.fail(getattr(exc, "stage", "summarize"), str(exc))
            return
        with job.lock:
            job.final = final
            job.record_id = record_id
        job.advance(JobState.COMPLETE)

    def run_auto_job(job: Job, spec: EvaluationSpec):
        """Batch execution: no human pause, states advance inside the task."""
        try:
            do_snapshots(job, spec.frame_params)
            if job.state is not JobState.SNAPSHOTS_READY:
                return
            with job.lock:
                job.spec = spec
            job.advance(JobState.EVALUATING)
            do_evaluate(job)
            if job.state is not JobState.EVALUATED:
                return
            job.advance(JobState.SUMMARIZING)
            do_summarize(job)
        except Exception as exc:  # defensive: a bug must not wedge the job
            logger.exception("auto job %s crashed", job.job_id)
            job.fail("internal", str(exc))

    # ------------------------------------------------------------ endpoints

    @app.get("/v1/health")
    def health():
        return {"status": "ok"}

    uploads_lock = threading.Lock()

    @app.post("/v1/videos", status_code=201)
    async def submit_video(file: UploadFile):
        data = await file.read()
        if len(data) > config.max_upload_bytes:
            return _err(413, f"upload exceeds {config.max_upload_bytes} bytes")
        if not data:
            return _err(422, "empty upload")
        digest = sha256_hex(data)
        now = time.monotonic()
        with uploads_lock:
            cached = upload_index.get(digest)
            if cached and now - cached[1] < config.idempotency_window_s and get_job(cached[0]):
                return {"job_id": cached[0], "state": get_job(cached[0]).state.value,
                        "deduplicated": True}
        suffix = Path(file.filename or "upload.bin").suffix or ".bin"
        asset_path = config.upload_dir / f"{digest}{suffix}"
        asset_path.write_bytes(data)
        try:
            from . import media
            media.probe(asset_path, config.pipeline.decoder_cmd)
        except (UndecodableMedia, NotFound) as exc:
            return _err(422, f"not a decodable video: {exc}")
        job = new_job(asset_path, digest)
        with uploads_lock:
            upload_index[digest] = (job.job_id, now)
        return {"job_id": job.job_id, "state": job.state.value, "deduplicated": False}

    @app.post("/v1/jobs/{job_id}/snapshots")
    def step1_snapshots(job_id: str, params: SnapshotParams):
        job = get_job(job_id)
        if job is None:
            return _err(404, "unknown job")
        try:
            frame_params = FrameParams(params.requested_frames, params.batch_size, params.max_dim)
        except ValueError as exc:
            return _err(422, str(exc))
        with job.lock:
            if job.state is not JobState.CREATED or job.claimed:
                return _err(409, f"snapshots step requires state created, job is {job.state.value}")
            job.claimed = True
        pool.submit(do_snapshots, job, frame_params).result()
        return job_view(job)

    @app.post("/v1/jobs/{job_id}/evaluate")
    def step2_evaluate(job_id: str, body: EvaluateBody):
        job = get_job(job_id)
        if job is None:
            return _err(404, "unknown job")
        try:
            mode = MultimodalMode(body.mode)
        except ValueError:
            return _err(422, f"mode must be video_only|video_audio, got '{body.mode}'")
        try:
            video_rubric = parse_rubric(body.video_rubric, Modality.VIDEO)
            audio_rubric = None
            if mode is MultimodalMode.VIDEO_AUDIO:
                if not body.audio_rubric:
                    return _err(422, "video_audio mode requires an audio rubric")
                audio_rubric = parse_rubric(body.audio_rubric, Modality.AUDIO)
        except EmptyRubric as exc:
            return _err(422, str(exc))
        with job.lock:
            if job.state is not JobState.SNAPSHOTS_READY:
                return _err(409, f"evaluate step requires state snapshots_ready, job is {job.state.value}")
            if mode is MultimodalMode.VIDEO_AUDIO and job.bundle.transcript is None:
                return _err(422, "video_audio mode but the asset has no audio stream / transcript")
            try:
                job.spec = EvaluationSpec(video_rubric=video_rubric, audio_rubric=audio_rubric,
                                          mode=mode, frame_params=job.frame_params,
                                          subject_id=body.subject_id, notes=body.notes)
            except ValueError as exc:
                return _err(422, str(exc))
            job.state = JobState.EVALUATING
        pool.submit(do_evaluate, job)
        return job_view(job)

    @app.put("/v1/jobs/{job_id}/full-response")
    def edit_full_response(job_id: str, body: EditBody):
        job = get_job(job_id)
        if job is None:
            return _err(404, "unknown job")
        with job.lock:
            if job.state is not JobState.EVALUATED:
                return _err(409, f"editing requires state evaluated, job is {job.state.value}")
            try:
                job.full = chain.apply_edits(job.full, body.text)
            except MalformedFullResponse as exc:
                return _err(422, str(exc))
        return job_view(job)

    @app.post("/v1/jobs/{job_id}/summarize")
    def step3_summarize(job_id: str):
        job = get_job(job_id)
        if job is None:
            return _err(404, "unknown job")
        with job.lock:
            if job.state is not JobState.EVALUATED:
                return _err(409, f"summarize step requires state evaluated, job is {job.state.value}")
            job.state = JobState.SUMMARIZING
        pool.submit(do_summarize, job)
        return job_view(job)

    @app.get("/v1/jobs/{job_id}")
    def get_job_view(job_id: str):
        job = get_job(job_id)
        if job is None:
            return _err(404, "unknown job")
        return job_view(job)

    @app.get("/v1/jobs")
    def list_jobs(state: str | None = None):
        if state is not None:
            try:
                JobState(state)
            except ValueError:
                return _err(422, f"unknown state '{state}'")
        with jobs_lock:
            items = list(jobs.values())
        out = []
        for job in sorted(items, key=lambda j: j.created_at):
            with job.lock:
                if state is not None and job.state.value != state:
                    continue
                out.append({"job_id": job.job_id, "state": job.state.value,
                            "auto": job.auto, "pair_name": job.pair_name,
                            "record_id": job.record_id, "error": job.error})
        return {"jobs": out}

    @app.post("/v1/batch")
    async def batch_submit(request: Request):
        raw = await request.body()
        try:
            sheet = load_pair_sheet(raw)
        except (MalformedSheet, InvalidPair, DuplicateName, EmptyRubric) as exc:
            return _err(422, str(exc))
        job_ids = []
        for pair in sheet.pairs:
            asset_path = Path(pair.video_path)
            if not asset_path.exists():
                return _err(422, f"pair '{pair.name}': video not found: {asset_path}")
        for pair in sheet.pairs:
            asset_path = Path(pair.video_path)
            digest = sha256_hex(asset_path.read_bytes())
            job = new_job(asset_path, digest, auto=True, pair_name=pair.name)
            spec = EvaluationSpec(video_rubric=pair.video_rubric,
                                  audio_rubric=pair.audio_rubric, mode=pair.mode,
                                  subject_id=pair.name)
            pool.submit(run_auto_job, job, spec)
            job_ids.append(job.job_id)
        return {"job_ids": job_ids}

    # ------------------------------------------------------------- archive

    @app.get("/v1/records")
    def list_records(subject: str | None = None, since: str | None = None,
                     until: str | None = None):
        try:
            since_dt = parse_utc(since) if since else None
            until_dt = parse_utc(until) if until else None
        except ValueError as exc:
            return _err(422, f"bad timestamp: {exc}")
        summaries = store.list_records(subject_id=subject, since=since_dt, until=until_dt)
        from .util import isoformat_utc
        return {"records": [{
            "record_id": s.record_id, "subject_id": s.subject_id,
            "created_at": isoformat_utc(s.created_at), "asset_digest": s.asset_digest,
            "mode": s.mode, "overall": s.overall, "criterion_count": s.criterion_count,
            "rerun": s.rerun, "edited": s.edited} for s in summaries]}

    @app.get("/v1/records/{record_id}")
    def get_record(record_id: str):
        from .records import record_to_dict
        try:
            record = store.load_record(record_id)
        except UnknownRecord:
            return _err(404, "unknown record")
        return record_to_dict(record)

    @app.get("/v1/progress")
    def get_progress(subject: str, criterion: int | None = None):
        from .util import isoformat_utc
        try:
            series = store.progress_series(subject, criterion)
        except UnknownSubject:
            return _err(404, f"no records for subject '{subject}'")
        return {"subject_id": series.subject_id,
                "criterion_ordinal": series.criterion_ordinal,
                "points": [{"created_at": isoformat_utc(p.created_at),
                            "score": p.score, "record_id": p.record_id}
                           for p in series.points]}

    @app.post("/v1/subjects/{subject_id}/redact")
    def redact(subject_id: str):
        return {"redacted": store.redact_subject(subject_id)}

    return app
