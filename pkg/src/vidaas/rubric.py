"""Rubric modeling: parse teacher-authored criteria text, render canonical
prompt blocks, and load video/rubric pair sheets for batch evaluation.

A rubric is an ordered list of equal-weight criteria. Accepted source markers
are ``1.`` / ``1)`` (numbered) and ``-`` / ``•`` (bulleted); markers may be
mixed within one rubric. Lines without a marker continue the previous
criterion (wrapped prose from a paste); unmarked lines before the first
marker are treated as preamble and ignored. Ordinals are assigned by
appearance order, regardless of the numbers in the source text.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources

from .errors import DuplicateName, EmptyRubric, InvalidPair, MalformedSheet

_NUMBERED = re.compile(r"^\s*\d+[.)]\s*(\S.*)$")
_BULLETED = re.compile(r"^\s*[-•]\s*(\S.*)$")

RUBRIC_HEADERS = {"video": "VIDEO RUBRIC:", "audio": "AUDIO RUBRIC:"}


class Modality(str, Enum):
    VIDEO = "video"
    AUDIO = "audio"


class MultimodalMode(str, Enum):
    VIDEO_ONLY = "video_only"
    VIDEO_AUDIO = "video_audio"


@dataclass(frozen=True)
class Criterion:
    ordinal: int
    text: str

    def __post_init__(self):
        if self.ordinal < 1:
            raise ValueError(f"criterion ordinal must be >= 1, got {self.ordinal}")
        if not self.text.strip():
            raise ValueError("criterion text is blank")


@dataclass(frozen=True)
class Rubric:
    title: str
    criteria: tuple[Criterion, ...]
    modality: Modality

    def __post_init__(self):
        if not self.criteria:
            raise ValueError("rubric has no criteria")
        ordinals = [c.ordinal for c in self.criteria]
        if ordinals != list(range(1, len(ordinals) + 1)):
            raise ValueError(f"criterion ordinals must be 1..n contiguous, got {ordinals}")

    def __len__(self) -> int:
        return len(self.criteria)


@dataclass(frozen=True)
class VideoPromptPair:
    name: str
    video_path: str
    video_rubric: Rubric
    audio_rubric: Rubric | None
    mode: MultimodalMode

    def __post_init__(self):
        if self.mode is MultimodalMode.VIDEO_AUDIO and self.audio_rubric is None:
            raise InvalidPair(f"pair '{self.name}': mode video_audio requires an audio rubric")


@dataclass(frozen=True)
class PairSheet:
    pairs: tuple[VideoPromptPair, ...]
    version: str = "1"


def parse_rubric(raw: str, modality: Modality | str, title: str = "") -> Rubric:
    """Parse free rubric text into an ordered Rubric.

    Raises EmptyRubric when no criteria can be found.
    """
    modality = Modality(modality)
    items: list[list[str]] = []
    for line in raw.splitlines():
        if not line.strip():
            continue
        m = _NUMBERED.match(line) or _BULLETED.match(line)
        if m:
            items.append([m.group(1).strip()])
        elif items:
            items[-1].append(line.strip())
        # unmarked text before the first item: preamble, dropped
    texts = [" ".join(parts).strip() for parts in items]
    texts = [t for t in texts if t]
    if not texts:
        raise EmptyRubric("no criteria found in rubric text")
    criteria = tuple(Criterion(i + 1, t) for i, t in enumerate(texts))
    return Rubric(title=title, criteria=criteria, modality=modality)


def render_rubric_prompt(rubric: Rubric) -> str:
    """Canonical numbered block under a one-line modality header.

    Deterministic: an identical Rubric always yields byte-identical text, so
    parse(render(r)) reproduces r's criteria.
    """
    header = RUBRIC_HEADERS[rubric.modality.value]
    lines = [header]
    lines.extend(f"{c.ordinal}. {c.text}" for c in rubric.criteria)
    return "\n".join(lines)


def load_pair_sheet(document: bytes | str) -> PairSheet:
    """Load the on-disk pair-sheet JSON document.

    Schema: {"version": "1", "pairs": [{"name", "video", "mode",
    "video_rubric", "audio_rubric"}]} with mode "video_only"|"video_audio".
    """
    if isinstance(document, bytes):
        try:
            document = document.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise MalformedSheet(f"pair sheet is not UTF-8: {exc}") from exc
    try:
        doc = json.loads(document)
    except json.JSONDecodeError as exc:
        raise MalformedSheet(f"pair sheet is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict) or not isinstance(doc.get("pairs"), list):
        raise MalformedSheet("pair sheet must be an object with a 'pairs' array")

    version = str(doc.get("version", "1"))
    pairs: list[VideoPromptPair] = []
    seen: set[str] = set()
    for i, entry in enumerate(doc["pairs"]):
        if not isinstance(entry, dict):
            raise MalformedSheet(f"pairs[{i}] is not an object")
        try:
            name = entry["name"]
            video = entry["video"]
            mode = MultimodalMode(entry["mode"])
            video_rubric_text = entry["video_rubric"]
        except (KeyError, ValueError) as exc:
            raise MalformedSheet(f"pairs[{i}]: {exc}") from exc
        if not isinstance(name, str) or not name.strip():
            raise MalformedSheet(f"pairs[{i}]: name must be a non-empty string")
        if name in seen:
            raise DuplicateName(f"duplicate pair name '{name}'")
        seen.add(name)

        try:
            video_rubric = parse_rubric(video_rubric_text, Modality.VIDEO, title=name)
        except EmptyRubric as exc:
            raise InvalidPair(f"pair '{name}': video rubric is empty") from exc

        audio_rubric = None
        audio_text = entry.get("audio_rubric")
        if mode is MultimodalMode.VIDEO_AUDIO:
            if not audio_text:
                raise InvalidPair(f"pair '{name}': mode video_audio requires an audio rubric")
            try:
                audio_rubric = parse_rubric(audio_text, Modality.AUDIO, title=name)
            except EmptyRubric as exc:
                raise InvalidPair(f"pair '{name}': audio rubric is empty") from exc
        elif audio_text:
            # carried but unused under video_only; keep it parsed for round-trips
            audio_rubric = parse_rubric(audio_text, Modality.AUDIO, title=name)

        pairs.append(VideoPromptPair(name=name, video_path=str(video),
                                     video_rubric=video_rubric,
                                     audio_rubric=audio_rubric, mode=mode))
    return PairSheet(pairs=tuple(pairs), version=version)


def dump_pair_sheet(sheet: PairSheet) -> str:
    """Inverse of load_pair_sheet for tooling; rubrics re-rendered canonically."""
    def rubric_text(r: Rubric | None) -> str | None:
        if r is None:
            return None
        return "\n".join(f"{c.ordinal}. {c.text}" for c in r.criteria)

    return json.dumps({
        "version": sheet.version,
        "pairs": [{
            "name": p.name,
            "video": p.video_path,
            "mode": p.mode.value,
            "video_rubric": rubric_text(p.video_rubric),
            "audio_rubric": rubric_text(p.audio_rubric),
        } for p in sheet.pairs],
    }, indent=2, ensure_ascii=False)


# Shipped example rubrics, keyed by template name. These are the bundled
# starting points teachers can adapt; each parses to a video-modality rubric.
TEMPLATE_NAMES = ("forward_roll", "class_demonstration", "fire_extinguisher", "forklift")


def template_text(name: str) -> str:
    if name not in TEMPLATE_NAMES:
        raise KeyError(f"unknown rubric template '{name}'; have {TEMPLATE_NAMES}")
    return resources.files("vidaas.templates.rubrics").joinpath(f"{name}.txt").read_text("utf-8")


def load_template(name: str) -> Rubric:
    return parse_rubric(template_text(name), Modality.VIDEO, title=name)
