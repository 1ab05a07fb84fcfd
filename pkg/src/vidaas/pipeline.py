"""End-to-end pipeline runs: decode, evaluate, assemble, summarize, record.

`run_pipeline` is the non-interactive traversal; the HTTP service composes
the same building blocks (`prepare_snapshots`, the chain functions, and
`finalize_record`) with human pauses between them, so a service job and a
library run over identical inputs yield identical records.

With the mock provider, a run is a pure function of (asset bytes, spec,
config) — the clock is part of the config for exactly that reason.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime
from pathlib import Path
from typing import Callable

from . import chain, media
from .chain import EvaluationSpec, FinalEvaluation, FullResponse, PartialEvaluation
from .decoder import DEFAULT_QSCALE, decoder_version, resolve_decoder
from .errors import MissingTranscript, PipelineError
from .gateway import Gateway, Transcript
from .records import AssessmentRecord, media_refs_from, mint_record_id, spec_digest
from .rubric import MultimodalMode
from .util import sha256_hex, utc_now


@dataclass
class PipelineConfig:
    decoder_cmd: list[str] | None = None
    jpeg_qscale: int = DEFAULT_QSCALE
    chain_mode: str = "independent"
    transcript_char_cap: int = chain.DEFAULT_TRANSCRIPT_CHAR_CAP
    max_workers: int | None = None
    clock: Callable[[], datetime] = field(default=utc_now)


@dataclass
class SnapshotBundle:
    info: media.MediaInfo
    frame_set: media.FrameSet
    batches: list[media.FrameBatch]
    audio: media.AudioTrack | None
    transcript: Transcript | None


def _stage(name: str, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except PipelineError:
        raise
    except Exception as exc:
        raise PipelineError(name, exc) from exc


def prepare_snapshots(asset: str | Path, frame_params: chain.FrameParams,
                      gw: Gateway, cfg: PipelineConfig,
                      transcribe_when_audio: bool) -> SnapshotBundle:
    """Decode stage: probe, sample, extract, batch, and (optionally) pull the
    audio track and transcribe it whenever the container has one."""
    info = _stage("probe", media.probe, asset, cfg.decoder_cmd)
    indices = _stage("sample", media.sample_indices, info.frame_count, frame_params.requested)
    frame_set = _stage("extract", media.extract_frames, asset, indices,
                       frame_params.max_dim, decoder_cmd=cfg.decoder_cmd,
                       qscale=cfg.jpeg_qscale, info=info)
    batches = _stage("batch", media.partition_batches, frame_set, frame_params.batch_size)
    audio = transcript = None
    if transcribe_when_audio and info.has_audio:
        audio = _stage("extract_audio", media.extract_audio, asset, cfg.decoder_cmd, info)
        if audio is not None:
            transcript = _stage("transcribe", gw.transcribe, audio)
    return SnapshotBundle(info=info, frame_set=frame_set, batches=batches,
                          audio=audio, transcript=transcript)


def evaluate(bundle: SnapshotBundle, spec: EvaluationSpec, gw: Gateway,
             cfg: PipelineConfig) -> list[PartialEvaluation]:
    """Evaluation stage: per-batch vision calls plus the transcript call when
    the run is multimodal."""
    partials = _stage("evaluate", chain.evaluate_batches, bundle.batches,
                      spec.video_rubric, gw, chain_mode=cfg.chain_mode,
                      max_workers=cfg.max_workers)
    if spec.mode is MultimodalMode.VIDEO_AUDIO:
        def _eval_transcript():
            if bundle.transcript is None:
                raise MissingTranscript("asset has no audio stream but mode is video_audio")
            return chain.evaluate_transcript(bundle.transcript, spec.audio_rubric, gw,
                                             mode=spec.mode,
                                             char_cap=cfg.transcript_char_cap)
        partials = partials + [_stage("evaluate_transcript", _eval_transcript)]
    return partials


def finalize_record(asset: str | Path, spec: EvaluationSpec, gw: Gateway,
                    cfg: PipelineConfig, bundle: SnapshotBundle,
                    partials: list[PartialEvaluation], full: FullResponse,
                    final: FinalEvaluation) -> AssessmentRecord:
    """Assemble the immutable archive record; shared by library and service."""
    created_at = cfg.clock()
    asset_digest = sha256_hex(Path(asset).read_bytes())
    sdig = spec_digest(spec)
    audio = bundle.audio if spec.mode is MultimodalMode.VIDEO_AUDIO else None
    media_refs, blobs = media_refs_from(bundle.frame_set, audio)
    provenance = {
        "provider_id": gw.provider_id,
        "vision_model": gw.vision_model,
        "text_model": gw.text_model,
        "transcribe_model": gw.transcribe_model,
        "template_version": chain.TEMPLATE_VERSION,
        "decoder_version": decoder_version(resolve_decoder(cfg.decoder_cmd)),
        "summary_prompt_digest": final.prompt_digest,
    }
    return AssessmentRecord(
        record_id=mint_record_id(created_at, asset_digest, sdig),
        created_at=created_at, subject_id=spec.subject_id,
        asset_digest=asset_digest, spec=spec, media_info=bundle.info,
        partials=tuple(partials), full_response=full, final=final,
        provenance=provenance, media=media_refs, blobs=blobs)


def run_pipeline(asset: str | Path, spec: EvaluationSpec, gw: Gateway,
                 cfg: PipelineConfig | None = None) -> AssessmentRecord:
    """Non-interactive end-to-end run. The first failing stage aborts the run
    with a stage-tagged PipelineError; there are no partial successes."""
    cfg = cfg or PipelineConfig()
    bundle = prepare_snapshots(
        asset, spec.frame_params, gw, cfg,
        transcribe_when_audio=spec.mode is MultimodalMode.VIDEO_AUDIO)
    partials = evaluate(bundle, spec, gw, cfg)
    full = _stage("assemble", chain.assemble_full_response, partials)
    final = _stage("summarize", chain.summarize, full, spec, gw)
    return _stage("record", finalize_record, asset, spec, gw, cfg, bundle,
                  partials, full, final)
