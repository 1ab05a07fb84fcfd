"""Assessment records: the immutable unit the archive stores.

A record snapshots everything a run consumed and produced — spec, media
metadata, partial evaluations, the (possibly edited) FULL response, the final
evaluation, and provenance. Frame images and audio are referenced by content
digest; payload bytes ride along in `blobs` but are never part of the
canonical serialization, so round-trips and comparisons stay cheap and
redaction can drop media without touching scores.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from datetime import datetime

from .chain import (AudioKind, EvaluationSpec, FinalEvaluation, FrameParams,
                    FullResponse, PartialEvaluation, ScoreEntry, ScoreSheet,
                    Section, VideoBatchKind)
from .errors import SerializationError
from .gateway import ModelText
from .media import AudioTrack, FrameSet, MediaInfo
from .rubric import Criterion, Modality, MultimodalMode, Rubric
from .util import canonical_json, digest_of, isoformat_utc, parse_utc, sortable_id

SCHEMA_VERSION = "1"


@dataclass(frozen=True)
class FrameRef:
    source_index: int
    timestamp: float
    digest: str
    width: int
    height: int
    format: str = "jpeg"


@dataclass(frozen=True)
class AudioRef:
    digest: str
    sample_rate: int
    channels: int
    duration: float


@dataclass(frozen=True)
class MediaRefs:
    source: str
    frames: tuple[FrameRef, ...]
    audio: AudioRef | None


@dataclass
class AssessmentRecord:
    record_id: str
    created_at: datetime
    subject_id: str
    asset_digest: str
    spec: EvaluationSpec
    media_info: MediaInfo
    partials: tuple[PartialEvaluation, ...]
    full_response: FullResponse
    final: FinalEvaluation
    provenance: dict
    media: MediaRefs | None
    rerun: bool = False
    schema_version: str = SCHEMA_VERSION
    # digest -> payload; side data, excluded from canonical form and equality
    blobs: dict[str, bytes] = field(default_factory=dict, repr=False, compare=False)


def media_refs_from(frames: FrameSet, audio: AudioTrack | None) -> tuple[MediaRefs, dict[str, bytes]]:
    """Build digest references plus the payload map for archive storage."""
    refs = tuple(FrameRef(f.source_index, f.timestamp, f.image.digest,
                          f.image.width, f.image.height, f.image.format)
                 for f in frames.frames)
    blobs = {f.image.digest: f.image.data for f in frames.frames}
    audio_ref = None
    if audio is not None:
        audio_ref = AudioRef(audio.digest, audio.sample_rate, audio.channels, audio.duration)
        blobs[audio.digest] = audio.data
    return MediaRefs(source=frames.source, frames=refs, audio=audio_ref), blobs


# ---------------------------------------------------------------- to dict

def rubric_to_dict(r: Rubric | None) -> dict | None:
    if r is None:
        return None
    return {"title": r.title, "modality": r.modality.value,
            "criteria": [{"ordinal": c.ordinal, "text": c.text} for c in r.criteria]}


def spec_to_dict(spec: EvaluationSpec) -> dict:
    return {
        "video_rubric": rubric_to_dict(spec.video_rubric),
        "audio_rubric": rubric_to_dict(spec.audio_rubric),
        "mode": spec.mode.value,
        "frame_params": {"requested": spec.frame_params.requested,
                         "batch_size": spec.frame_params.batch_size,
                         "max_dim": spec.frame_params.max_dim},
        "subject_id": spec.subject_id,
        "notes": spec.notes,
    }


def spec_digest(spec: EvaluationSpec) -> str:
    return digest_of(spec_to_dict(spec))


def _scoresheet_to_dict(s: ScoreSheet | None) -> dict | None:
    if s is None:
        return None
    return {"entries": [{"ordinal": e.ordinal, "score": e.score, "rationale": e.rationale}
                        for e in s.entries],
            "overall": s.overall}


def _partial_to_dict(p: PartialEvaluation) -> dict:
    if isinstance(p.kind, VideoBatchKind):
        kind = {"type": "video_batch", "batch_index": p.kind.batch_index,
                "span": [p.kind.span[0], p.kind.span[1]]}
    else:
        kind = {"type": "audio"}
    return {"kind": kind, "prompt_digest": p.prompt_digest,
            "evaluation_text": p.evaluation_text,
            "prompt_tokens": p.prompt_tokens, "completion_tokens": p.completion_tokens}


def record_to_dict(r: AssessmentRecord) -> dict:
    return {
        "schema_version": r.schema_version,
        "record_id": r.record_id,
        "created_at": isoformat_utc(r.created_at),
        "subject_id": r.subject_id,
        "asset_digest": r.asset_digest,
        "rerun": r.rerun,
        "spec": spec_to_dict(r.spec),
        "media_info": {"duration": r.media_info.duration, "frame_count": r.media_info.frame_count,
                       "fps": r.media_info.fps, "has_audio": r.media_info.has_audio,
                       "width": r.media_info.width, "height": r.media_info.height},
        "partials": [_partial_to_dict(p) for p in r.partials],
        "full_response": {"edited": r.full_response.edited,
                          "sections": [{"header": s.header, "body": s.body}
                                       for s in r.full_response.sections]},
        "final": {"narrative": r.final.narrative,
                  "scores": _scoresheet_to_dict(r.final.scores),
                  "audio_scores": _scoresheet_to_dict(r.final.audio_scores),
                  "prompt_digest": r.final.prompt_digest,
                  "model_text": {"text": r.final.model_text.text,
                                 "prompt_tokens": r.final.model_text.prompt_tokens,
                                 "completion_tokens": r.final.model_text.completion_tokens,
                                 "provider_id": r.final.model_text.provider_id,
                                 "latency_ms": r.final.model_text.latency_ms}},
        "provenance": dict(sorted(r.provenance.items())),
        "media": None if r.media is None else {
            "source": r.media.source,
            "frames": [{"source_index": f.source_index, "timestamp": f.timestamp,
                        "digest": f.digest, "width": f.width, "height": f.height,
                        "format": f.format} for f in r.media.frames],
            "audio": None if r.media.audio is None else {
                "digest": r.media.audio.digest, "sample_rate": r.media.audio.sample_rate,
                "channels": r.media.audio.channels, "duration": r.media.audio.duration}},
    }


def canonical_record_json(r: AssessmentRecord) -> str:
    return canonical_json(record_to_dict(r))


# ---------------------------------------------------------------- from dict

def rubric_from_dict(d: dict | None) -> Rubric | None:
    if d is None:
        return None
    return Rubric(title=d["title"],
                  criteria=tuple(Criterion(c["ordinal"], c["text"]) for c in d["criteria"]),
                  modality=Modality(d["modality"]))


def spec_from_dict(d: dict) -> EvaluationSpec:
    fp = d["frame_params"]
    return EvaluationSpec(
        video_rubric=rubric_from_dict(d["video_rubric"]),
        audio_rubric=rubric_from_dict(d.get("audio_rubric")),
        mode=MultimodalMode(d["mode"]),
        frame_params=FrameParams(fp["requested"], fp["batch_size"], fp["max_dim"]),
        subject_id=d["subject_id"], notes=d.get("notes"))


def _scoresheet_from_dict(d: dict | None) -> ScoreSheet | None:
    if d is None:
        return None
    return ScoreSheet(entries=tuple(ScoreEntry(e["ordinal"], e["score"], e["rationale"])
                                    for e in d["entries"]),
                      overall=d["overall"])


def _partial_from_dict(d: dict) -> PartialEvaluation:
    k = d["kind"]
    kind = (VideoBatchKind(k["batch_index"], (k["span"][0], k["span"][1]))
            if k["type"] == "video_batch" else AudioKind())
    return PartialEvaluation(kind=kind, prompt_digest=d["prompt_digest"],
                             evaluation_text=d["evaluation_text"],
                             prompt_tokens=d["prompt_tokens"],
                             completion_tokens=d["completion_tokens"])


def record_from_dict(d: dict) -> AssessmentRecord:
    try:
        mi = d["media_info"]
        fin = d["final"]
        mt = fin["model_text"]
        media = d.get("media")
        media_refs = None
        if media is not None:
            media_refs = MediaRefs(
                source=media["source"],
                frames=tuple(FrameRef(f["source_index"], f["timestamp"], f["digest"],
                                      f["width"], f["height"], f.get("format", "jpeg"))
                             for f in media["frames"]),
                audio=None if media.get("audio") is None else AudioRef(
                    media["audio"]["digest"], media["audio"]["sample_rate"],
                    media["audio"]["channels"], media["audio"]["duration"]))
        return AssessmentRecord(
            record_id=d["record_id"],
            created_at=parse_utc(d["created_at"]),
            subject_id=d["subject_id"],
            asset_digest=d["asset_digest"],
            spec=spec_from_dict(d["spec"]),
            media_info=MediaInfo(duration=mi["duration"], frame_count=mi["frame_count"],
                                 fps=mi["fps"], has_audio=mi["has_audio"],
                                 width=mi["width"], height=mi["height"]),
            partials=tuple(_partial_from_dict(p) for p in d["partials"]),
            full_response=FullResponse(
                sections=tuple(Section(s["header"], s["body"])
                               for s in d["full_response"]["sections"]),
                edited=d["full_response"]["edited"]),
            final=FinalEvaluation(
                narrative=fin["narrative"],
                scores=_scoresheet_from_dict(fin["scores"]),
                audio_scores=_scoresheet_from_dict(fin.get("audio_scores")),
                model_text=ModelText(text=mt["text"], prompt_tokens=mt["prompt_tokens"],
                                     completion_tokens=mt["completion_tokens"],
                                     provider_id=mt["provider_id"], latency_ms=mt["latency_ms"]),
                prompt_digest=fin["prompt_digest"]),
            provenance=d["provenance"],
            media=media_refs,
            rerun=d["rerun"],
            schema_version=d["schema_version"])
    except (KeyError, TypeError, ValueError) as exc:
        raise SerializationError(f"cannot reconstruct record: {exc}") from exc


def mint_record_id(created_at: datetime, asset_digest: str, spec_dig: str) -> str:
    return sortable_id(created_at, f"{asset_digest}:{spec_dig}")
