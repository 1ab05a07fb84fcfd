"""The evaluation chain: frame batches and a transcript go in, partial
evaluations come out, a human may edit the assembled FULL response, and a
final summarizer call produces one bounded score per rubric criterion.

Per-batch vision calls are independent of each other (map-reduce topology;
only the summarizer sees everything), which keeps wall time flat as frame
counts grow. `chain_mode="cumulative"` instead threads each batch's
evaluation into the next prompt, at the cost of sequential execution.
"""

from __future__ import annotations

import logging
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources

from .errors import MalformedFullResponse, MissingTranscript, ScoreParseError
from .gateway import ChatRequest, Gateway, ModelText, Transcript, chat_request
from .media import (DEFAULT_BATCH_SIZE, DEFAULT_MAX_DIM,
                    DEFAULT_REQUESTED_FRAMES, FrameBatch)
from .rubric import Modality, MultimodalMode, Rubric, render_rubric_prompt
from .util import sha256_hex

logger = logging.getLogger(__name__)

TEMPLATE_VERSION = "1"
SYSTEM_INSTRUCTION = ("You are a meticulous observational assessment assistant. "
                      "You ground every statement in the provided evidence.")

VIDEO_HEADER_RE = re.compile(r"^== VIDEO BATCH (\d+)/(\d+) \((\d+(?:\.\d+)?)-(\d+(?:\.\d+)?) s\) ==$")
AUDIO_HEADER = "== AUDIO =="
_ANY_HEADER_RE = re.compile(r"^== .* ==$")

DEFAULT_TRANSCRIPT_CHAR_CAP = 24000


def _template(name: str) -> str:
    return resources.files("vidaas.templates.prompts").joinpath(f"{name}.txt").read_text("utf-8")


# ---------------------------------------------------------------- types

@dataclass(frozen=True)
class FrameParams:
    requested: int = DEFAULT_REQUESTED_FRAMES
    batch_size: int = DEFAULT_BATCH_SIZE
    max_dim: int = DEFAULT_MAX_DIM

    def __post_init__(self):
        if self.requested < 1 or self.batch_size < 1 or self.max_dim < 16:
            raise ValueError("frame params out of range")


@dataclass(frozen=True)
class EvaluationSpec:
    video_rubric: Rubric
    audio_rubric: Rubric | None
    mode: MultimodalMode
    frame_params: FrameParams = field(default_factory=FrameParams)
    subject_id: str = "anonymous"
    notes: str | None = None

    def __post_init__(self):
        if not self.subject_id.strip():
            raise ValueError("subject_id must be non-empty")
        if self.video_rubric.modality is not Modality.VIDEO:
            raise ValueError("video_rubric must have video modality")
        if self.mode is MultimodalMode.VIDEO_AUDIO:
            if self.audio_rubric is None:
                raise ValueError("video_audio mode requires an audio rubric")
            if self.audio_rubric.modality is not Modality.AUDIO:
                raise ValueError("audio_rubric must have audio modality")


@dataclass(frozen=True)
class VideoBatchKind:
    batch_index: int
    span: tuple[float, float]


@dataclass(frozen=True)
class AudioKind:
    pass


@dataclass(frozen=True)
class PartialEvaluation:
    kind: VideoBatchKind | AudioKind
    prompt_digest: str
    evaluation_text: str
    prompt_tokens: int
    completion_tokens: int

    def __post_init__(self):
        if not self.evaluation_text:
            raise ValueError("evaluation_text must be non-empty")


@dataclass(frozen=True)
class Section:
    header: str
    body: str


@dataclass(frozen=True)
class FullResponse:
    sections: tuple[Section, ...]
    edited: bool = False


@dataclass(frozen=True)
class ScoreEntry:
    ordinal: int
    score: int
    rationale: str


@dataclass(frozen=True)
class ScoreSheet:
    entries: tuple[ScoreEntry, ...]
    overall: float

    def score_for(self, ordinal: int) -> int | None:
        for e in self.entries:
            if e.ordinal == ordinal:
                return e.score
        return None


@dataclass(frozen=True)
class FinalEvaluation:
    narrative: str
    scores: ScoreSheet
    audio_scores: ScoreSheet | None
    model_text: ModelText
    prompt_digest: str


# ---------------------------------------------------------------- batches

def _batch_context(first_pos: int, last_pos: int, total: int, span: tuple[float, float]) -> str:
    return (f"Context: frames {first_pos}-{last_pos} of {total}, "
            f"{span[0]:.2f}-{span[1]:.2f} s of the performance.")


def _batch_request(batch: FrameBatch, rubric: Rubric, gw: Gateway,
                   first_pos: int, total: int, previous_text: str | None) -> ChatRequest:
    context = _batch_context(first_pos, first_pos + len(batch.frames) - 1, total, batch.span)
    if previous_text:
        context += ("\n\nEvaluation of the preceding frames, to build upon:\n"
                    + previous_text)
    user_text = _template("vision_batch").format(
        rubric=render_rubric_prompt(rubric), context=context)
    return chat_request(gw.vision_model, SYSTEM_INSTRUCTION, user_text,
                        images=[f.image for f in batch.frames])


def evaluate_batches(batches: list[FrameBatch], rubric: Rubric, gw: Gateway,
                     chain_mode: str = "independent",
                     max_workers: int | None = None) -> list[PartialEvaluation]:
    """One vision call per frame batch; output order follows batch order even
    when the calls run concurrently. Any failure aborts the whole run, tagged
    with the lowest failing batch index."""
    if not batches:
        raise ValueError("no batches to evaluate")
    if rubric.modality is not Modality.VIDEO:
        raise ValueError("batch evaluation requires a video-modality rubric")
    if chain_mode not in ("independent", "cumulative"):
        raise ValueError(f"unknown chain_mode '{chain_mode}'")

    total = sum(len(b.frames) for b in batches)
    offsets = []
    pos = 1
    for b in batches:
        offsets.append(pos)
        pos += len(b.frames)

    def run_one(i: int, previous_text: str | None) -> PartialEvaluation:
        req = _batch_request(batches[i], rubric, gw, offsets[i], total, previous_text)
        mt = gw.vision_complete(req)
        return PartialEvaluation(
            kind=VideoBatchKind(batch_index=batches[i].batch_index, span=batches[i].span),
            prompt_digest=gw.request_digest(req), evaluation_text=mt.text.strip(),
            prompt_tokens=mt.prompt_tokens, completion_tokens=mt.completion_tokens)

    if chain_mode == "cumulative":
        results = []
        previous = None
        for i in range(len(batches)):
            partial = run_one(i, previous)
            results.append(partial)
            previous = partial.evaluation_text
        return results

    with ThreadPoolExecutor(max_workers=max_workers or min(len(batches), 8)) as pool:
        futures = [pool.submit(run_one, i, None) for i in range(len(batches))]
        failures = [(i, f.exception()) for i, f in enumerate(futures) if f.exception()]
        if failures:
            i, exc = failures[0]
            raise type(exc)(f"batch {batches[i].batch_index}: {exc}") from exc
        return [f.result() for f in futures]


# ---------------------------------------------------------------- transcript

def _split_sentences(text: str, cap: int) -> list[str]:
    if len(text) <= cap:
        return [text]
    sentences = re.split(r"(?<=[.!?])\s+", text)
    chunks, current = [], ""
    for s in sentences:
        if current and len(current) + len(s) + 1 > cap:
            chunks.append(current)
            current = s
        else:
            current = f"{current} {s}".strip()
    if current:
        chunks.append(current)
    return chunks


def evaluate_transcript(transcript: Transcript | None, rubric: Rubric, gw: Gateway,
                        mode: MultimodalMode = MultimodalMode.VIDEO_AUDIO,
                        char_cap: int = DEFAULT_TRANSCRIPT_CHAR_CAP) -> PartialEvaluation:
    """Single audio-kind partial. Long transcripts are split at sentence
    boundaries into sequential calls whose outputs are merged."""
    if mode is not MultimodalMode.VIDEO_AUDIO:
        raise ValueError("transcript evaluation is only valid in video_audio mode")
    if rubric.modality is not Modality.AUDIO:
        raise ValueError("transcript evaluation requires an audio-modality rubric")
    if transcript is None:
        raise MissingTranscript("asset has no audio stream but mode is video_audio")

    chunks = _split_sentences(transcript.text, char_cap)
    texts, digests = [], []
    prompt_tokens = completion_tokens = 0
    for j, chunk in enumerate(chunks, start=1):
        context = "Context: complete transcript." if len(chunks) == 1 else \
            f"Context: transcript part {j} of {len(chunks)}."
        user_text = _template("audio_eval").format(
            rubric=render_rubric_prompt(rubric), context=context, transcript=chunk)
        req = chat_request(gw.text_model, SYSTEM_INSTRUCTION, user_text)
        mt = gw.text_complete(req)
        texts.append(mt.text.strip())
        digests.append(gw.request_digest(req))
        prompt_tokens += mt.prompt_tokens
        completion_tokens += mt.completion_tokens
    digest = digests[0] if len(digests) == 1 else sha256_hex("".join(digests).encode("ascii"))
    return PartialEvaluation(kind=AudioKind(), prompt_digest=digest,
                             evaluation_text="\n\n".join(texts),
                             prompt_tokens=prompt_tokens, completion_tokens=completion_tokens)


# ---------------------------------------------------------------- FULL response

def _video_header(k: int, total: int, span: tuple[float, float]) -> str:
    return f"== VIDEO BATCH {k}/{total} ({span[0]:.2f}-{span[1]:.2f} s) =="


def assemble_full_response(partials: list[PartialEvaluation]) -> FullResponse:
    """Canonical editable document: video sections ascending, then audio."""
    if not partials:
        raise ValueError("no partial evaluations to assemble")
    video = sorted((p for p in partials if isinstance(p.kind, VideoBatchKind)),
                   key=lambda p: p.kind.batch_index)
    audio = [p for p in partials if isinstance(p.kind, AudioKind)]
    indices = [p.kind.batch_index for p in video]
    if len(set(indices)) != len(indices):
        raise ValueError(f"duplicate batch indices in partials: {indices}")
    if len(audio) > 1:
        raise ValueError("at most one audio partial is allowed")

    sections = [Section(_video_header(k, len(video), p.kind.span), p.evaluation_text.strip())
                for k, p in enumerate(video, start=1)]
    sections += [Section(AUDIO_HEADER, p.evaluation_text.strip()) for p in audio]
    return FullResponse(sections=tuple(sections), edited=False)


def serialize_full_response(fr: FullResponse) -> str:
    return "\n\n".join(f"{s.header}\n{s.body}" for s in fr.sections) + "\n"


def parse_full_response(text: str) -> FullResponse:
    """Inverse of serialize_full_response; strict about headers so that a
    mangled edit cannot silently drop or invent sections."""
    sections: list[Section] = []
    current_header: str | None = None
    body_lines: list[str] = []

    def close():
        if current_header is not None:
            sections.append(Section(current_header, "\n".join(body_lines).strip()))

    for line in text.splitlines():
        if _ANY_HEADER_RE.match(line.strip()):
            header = line.strip()
            if header != AUDIO_HEADER and not VIDEO_HEADER_RE.match(header):
                raise MalformedFullResponse(f"unknown header line: {header}")
            close()
            current_header = header
            body_lines = []
        elif current_header is None:
            if line.strip():
                raise MalformedFullResponse("content before the first section header")
        else:
            body_lines.append(line)
    close()

    if not sections:
        raise MalformedFullResponse("no sections found")
    seen_audio = False
    expected_k = 1
    for s in sections:
        m = VIDEO_HEADER_RE.match(s.header)
        if m:
            if seen_audio:
                raise MalformedFullResponse("video section after the audio section")
            if int(m.group(1)) != expected_k:
                raise MalformedFullResponse(
                    f"video sections out of order: expected batch {expected_k}, got {m.group(1)}")
            expected_k += 1
        else:
            if seen_audio:
                raise MalformedFullResponse("duplicate audio section")
            seen_audio = True
        if not s.body:
            raise MalformedFullResponse(f"section '{s.header}' has an empty body")
    return FullResponse(sections=tuple(sections), edited=False)


def apply_edits(original: FullResponse, text: str) -> FullResponse:
    """Re-ingest a human-edited FULL response. Headers are fixed; only bodies
    may change. The edited flag is sticky once set."""
    parsed = parse_full_response(text)
    if [s.header for s in parsed.sections] != [s.header for s in original.sections]:
        raise MalformedFullResponse("section headers must not be added, removed, or reordered")
    changed = [s.body for s in parsed.sections] != [s.body for s in original.sections]
    return FullResponse(sections=parsed.sections, edited=original.edited or changed)


# ---------------------------------------------------------------- scores

_SCORE_LINE_RE = re.compile(r"^(\d+):\s*(\d+)/5\s*[-—–]\s*(.*\S)\s*$")
_OVERALL_RE = re.compile(r"^OVERALL:\s*\d+(?:\.\d+)?/5\s*$")


def parse_scores(model_output: str, rubric: Rubric, marker: str = "SCORES") -> ScoreSheet:
    """Parse the delimited score block and validate it against the rubric.

    The model's own OVERALL line is ignored; the overall is recomputed as the
    arithmetic mean rounded to one decimal.
    """
    lines = model_output.splitlines()
    starts = [i for i, line in enumerate(lines) if line.strip() == marker]
    if not starts:
        raise ScoreParseError("malformed_block", detail=f"no {marker} block in model output")

    raw: dict[int, tuple[int, str]] = {}
    for line in lines[starts[-1] + 1:]:
        stripped = line.strip()
        if not stripped:
            continue
        if _OVERALL_RE.match(stripped) or _ANY_HEADER_RE.match(stripped) or stripped == "AUDIO SCORES":
            break
        m = _SCORE_LINE_RE.match(stripped)
        if not m:
            raise ScoreParseError("malformed_block", detail=f"unparseable score line: {stripped!r}")
        ordinal, score, rationale = int(m.group(1)), int(m.group(2)), m.group(3)
        if ordinal in raw:
            raise ScoreParseError("malformed_block", detail=f"duplicate ordinal {ordinal}")
        raw[ordinal] = (score, rationale)

    expected = {c.ordinal for c in rubric.criteria}
    unknown = sorted(set(raw) - expected)
    if unknown:
        raise ScoreParseError("malformed_block", detail=f"ordinals not in rubric: {unknown}")
    bad = sorted(o for o, (s, _) in raw.items() if not 0 <= s <= 5)
    if bad:
        raise ScoreParseError("out_of_range",
                              detail=f"scores outside 0..5 for ordinals {bad}")
    missing = sorted(expected - set(raw))
    if missing:
        raise ScoreParseError("missing_ordinals", missing_ordinals=missing,
                              detail=f"no score for ordinals {missing}")

    entries = tuple(ScoreEntry(o, raw[o][0], raw[o][1]) for o in sorted(raw))
    overall = round(sum(e.score for e in entries) / len(entries), 1)
    return ScoreSheet(entries=entries, overall=overall)


# ---------------------------------------------------------------- summarize

def _summarize_request(fr: FullResponse, spec: EvaluationSpec, gw: Gateway,
                       correction: bool) -> ChatRequest:
    with_audio = spec.mode is MultimodalMode.VIDEO_AUDIO and spec.audio_rubric is not None
    rubrics = render_rubric_prompt(spec.video_rubric)
    if with_audio:
        rubrics += "\n\n" + render_rubric_prompt(spec.audio_rubric)
    user_text = _template("summarize").format(
        audio_note=" and for the spoken transcript" if with_audio else "",
        rubrics=rubrics,
        full_response=serialize_full_response(fr),
        audio_contract=_template("audio_contract") if with_audio else "")
    if correction:
        user_text += "\n\n" + _template("correction")
    return chat_request(gw.text_model, SYSTEM_INSTRUCTION, user_text)


def _narrative_before_scores(text: str) -> str:
    lines = text.splitlines()
    for i, line in enumerate(lines):
        if line.strip() in ("SCORES", "AUDIO SCORES"):
            return "\n".join(lines[:i]).strip()
    return text.strip()


def summarize(fr: FullResponse, spec: EvaluationSpec, gw: Gateway) -> FinalEvaluation:
    """One summarizer call; a single structured retry appends a correction
    instruction when the score block fails to parse."""
    attempt_correction = False
    last_error: ScoreParseError | None = None
    for _ in range(2):
        req = _summarize_request(fr, spec, gw, correction=attempt_correction)
        mt = gw.text_complete(req)
        try:
            scores = parse_scores(mt.text, spec.video_rubric, marker="SCORES")
            audio_scores = None
            if spec.mode is MultimodalMode.VIDEO_AUDIO and spec.audio_rubric is not None:
                audio_scores = parse_scores(mt.text, spec.audio_rubric, marker="AUDIO SCORES")
            return FinalEvaluation(narrative=_narrative_before_scores(mt.text),
                                   scores=scores, audio_scores=audio_scores,
                                   model_text=mt, prompt_digest=gw.request_digest(req))
        except ScoreParseError as exc:
            logger.warning("score block parse failed (%s); %s", exc.reason,
                           "giving up" if attempt_correction else "retrying with correction")
            last_error = exc
            attempt_correction = True
    raise last_error
