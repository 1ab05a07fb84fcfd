"""Provider-agnostic model access: vision chat (images+text -> text), text
chat, and audio transcription over the OpenAI-compatible wire protocol.

Three layers:
  * transports — a callable turning a TransportRequest into a TransportResponse;
    the HTTP transport injects auth itself so keys never reach other layers,
    and the fixture transport records/replays responses keyed by request digest.
  * OpenAICompatGateway — request building, validation, retry with exponential
    backoff and jitter, bounded in-flight concurrency.
  * MockGateway — a pure function of the request bytes for offline runs. Its
    replies embed a stable 8-hex digest of the request and, when the prompt
    carries the score-block contract, synthesized per-criterion score lines,
    so downstream score parsing is exercised without any provider.
"""

from __future__ import annotations

import base64
import logging
import os
import random
import re
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Protocol

import httpx

from .errors import (AuthError, FixtureMiss, PayloadTooLarge, ProviderError,
                     RateLimited, Timeout)
from .media import AudioTrack, EncodedImage
from .util import canonical_json, sha256_hex

logger = logging.getLogger(__name__)

RETRY_BASE_DELAY = 0.5
RETRY_MAX_DELAY = 8.0
RETRY_JITTER = 0.25


# ---------------------------------------------------------------- messages

@dataclass(frozen=True)
class TextPart:
    text: str


@dataclass(frozen=True)
class ImagePart:
    image: EncodedImage


Part = TextPart | ImagePart


@dataclass(frozen=True)
class Message:
    role: str  # "system" | "user"
    parts: tuple[Part, ...]

    def __post_init__(self):
        if self.role not in ("system", "user"):
            raise ValueError(f"unsupported role '{self.role}'")


@dataclass(frozen=True)
class ChatRequest:
    model: str
    messages: tuple[Message, ...]

    def text_content(self) -> str:
        return "\n".join(p.text for m in self.messages for p in m.parts
                         if isinstance(p, TextPart))

    def image_parts(self) -> list[ImagePart]:
        return [p for m in self.messages for p in m.parts if isinstance(p, ImagePart)]

    def user_messages(self) -> list[Message]:
        return [m for m in self.messages if m.role == "user"]


def chat_request(model: str, system: str, user_text: str,
                 images: list[EncodedImage] | tuple[EncodedImage, ...] = ()) -> ChatRequest:
    """Convenience constructor: one system message, one user message."""
    parts: list[Part] = [TextPart(user_text)]
    parts.extend(ImagePart(img) for img in images)
    return ChatRequest(model=model, messages=(
        Message("system", (TextPart(system),)),
        Message("user", tuple(parts)),
    ))


@dataclass(frozen=True)
class ModelText:
    text: str
    prompt_tokens: int
    completion_tokens: int
    provider_id: str
    latency_ms: int


@dataclass(frozen=True)
class Transcript:
    text: str
    language: str | None
    duration: float


# ---------------------------------------------------------------- transports

@dataclass
class TransportRequest:
    method: str
    url: str
    digest: str  # canonical request digest; auth-free fixture key
    json_body: dict | None = None
    files: dict | None = None
    data: dict | None = None
    timeout: float = 60.0


@dataclass
class TransportResponse:
    status: int
    body: dict | None
    text: str = ""


class TransportTimeout(Exception):
    """Transport-level timeout or connection failure (retryable)."""


Transport = Callable[[TransportRequest], TransportResponse]


class HttpxTransport:
    """Real HTTP transport. The bearer token is resolved from the environment
    at call time and never stored on the request object, so fixture and log
    layers cannot observe it."""

    def __init__(self, api_key_ref: str = "VIDAAS_API_KEY"):
        self.api_key_ref = api_key_ref
        self._client = httpx.Client()

    def __call__(self, req: TransportRequest) -> TransportResponse:
        headers = {}
        key = os.environ.get(self.api_key_ref, "")
        if key:
            headers["Authorization"] = f"Bearer {key}"
        try:
            resp = self._client.request(
                req.method, req.url, headers=headers, json=req.json_body,
                files=req.files, data=req.data, timeout=req.timeout)
        except (httpx.TimeoutException, httpx.ConnectError, httpx.ReadError) as exc:
            raise TransportTimeout(str(exc)) from exc
        try:
            body = resp.json()
        except ValueError:
            body = None
        return TransportResponse(status=resp.status_code, body=body, text=resp.text)

    def close(self):
        self._client.close()


class FixtureTransport:
    """Record/replay layer keyed by request digest.

    record: forward to the inner transport, then persist {status, body} as
    <digest>.json (headers are never written). replay: serve the stored
    response or raise FixtureMiss.
    """

    def __init__(self, directory: str | Path, mode: str, inner: Transport | None = None):
        if mode not in ("record", "replay"):
            raise ValueError(f"fixture mode must be record|replay, got '{mode}'")
        self.directory = Path(directory)
        self.mode = mode
        self.inner = inner
        self.directory.mkdir(parents=True, exist_ok=True)

    def _path(self, digest: str) -> Path:
        return self.directory / f"{digest}.json"

    def __call__(self, req: TransportRequest) -> TransportResponse:
        import json
        path = self._path(req.digest)
        if self.mode == "replay":
            if not path.exists():
                raise FixtureMiss(f"no fixture for request digest {req.digest}")
            stored = json.loads(path.read_text("utf-8"))
            return TransportResponse(status=stored["status"], body=stored["body"],
                                     text=stored.get("text", ""))
        if self.inner is None:
            raise ValueError("record mode requires an inner transport")
        resp = self.inner(req)
        path.write_text(json.dumps(
            {"status": resp.status, "body": resp.body, "text": resp.text},
            ensure_ascii=False, indent=2), "utf-8")
        return resp


def fixtures_from_env(inner: Transport, env: str | None = None) -> Transport:
    """Wrap `inner` per VIDAAS_FIXTURES ("record:<dir>" | "replay:<dir>" | unset)."""
    setting = env if env is not None else os.environ.get("VIDAAS_FIXTURES", "")
    if not setting:
        return inner
    mode, _, directory = setting.partition(":")
    if mode not in ("record", "replay") or not directory:
        raise ValueError(f"VIDAAS_FIXTURES must look like 'record:/dir' or 'replay:/dir', got '{setting}'")
    return FixtureTransport(directory, mode, inner=inner)


# ---------------------------------------------------------------- config

@dataclass
class ProviderConfig:
    base_url: str = "http://127.0.0.1:8080/v1"
    api_key_ref: str = "VIDAAS_API_KEY"
    vision_model: str = "gpt-4o-mini"
    text_model: str = "gpt-4o-mini"
    transcribe_model: str = "whisper-1"
    temperature: float = 0.0
    max_output_tokens: int = 1024
    request_timeout: float = 60.0
    max_retries: int = 3
    max_in_flight: int = 4
    max_images_per_request: int = 20
    max_audio_bytes: int = 25 * 1024 * 1024
    seed: int | None = 7

    def __post_init__(self):
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError("temperature must be in [0, 2]")
        if self.max_retries < 0 or self.max_in_flight < 1:
            raise ValueError("max_retries >= 0 and max_in_flight >= 1 required")

    @classmethod
    def from_env(cls) -> "ProviderConfig":
        cfg = cls()
        if os.environ.get("VIDAAS_PROVIDER_URL"):
            cfg.base_url = os.environ["VIDAAS_PROVIDER_URL"].rstrip("/")
        for attr, var in (("vision_model", "VIDAAS_VISION_MODEL"),
                          ("text_model", "VIDAAS_TEXT_MODEL"),
                          ("transcribe_model", "VIDAAS_TRANSCRIBE_MODEL")):
            if os.environ.get(var):
                setattr(cfg, attr, os.environ[var])
        return cfg


# ---------------------------------------------------------------- digests

def chat_digest(req: ChatRequest, temperature: float = 0.0, seed: int | None = None) -> str:
    """Stable digest of a chat request; image payloads enter as sha256 refs."""
    messages = []
    for m in req.messages:
        parts = []
        for p in m.parts:
            if isinstance(p, TextPart):
                parts.append({"type": "text", "text": p.text})
            else:
                parts.append({"type": "image", "sha256": p.image.digest,
                              "w": p.image.width, "h": p.image.height})
        messages.append({"role": m.role, "parts": parts})
    return sha256_hex(canonical_json(
        {"model": req.model, "messages": messages,
         "temperature": temperature, "seed": seed}).encode("utf-8"))


def transcribe_digest(audio: AudioTrack, model: str) -> str:
    return sha256_hex(canonical_json(
        {"op": "transcribe", "model": model, "file_sha256": audio.digest}).encode("utf-8"))


# ---------------------------------------------------------------- interface

class Gateway(Protocol):
    provider_id: str
    vision_model: str
    text_model: str
    transcribe_model: str

    def vision_complete(self, req: ChatRequest) -> ModelText: ...
    def text_complete(self, req: ChatRequest) -> ModelText: ...
    def transcribe(self, audio: AudioTrack) -> Transcript: ...
    def request_digest(self, req: ChatRequest) -> str: ...


def _validate_chat(req: ChatRequest, allow_images: bool, max_images: int):
    if not req.user_messages():
        raise ValueError("chat request needs at least one user message")
    images = req.image_parts()
    if not allow_images and images:
        raise ValueError("image parts are only allowed on the vision model")
    if allow_images and len(images) > max_images:
        raise ValueError(f"{len(images)} images exceed the per-request limit of {max_images}")


# ---------------------------------------------------------------- live

class OpenAICompatGateway:
    """Gateway over any server speaking the OpenAI-compatible endpoints."""

    def __init__(self, config: ProviderConfig, transport: Transport | None = None,
                 sleeper: Callable[[float], None] = time.sleep,
                 rng: random.Random | None = None):
        self.config = config
        host = httpx.URL(config.base_url).host or "local"
        self.provider_id = f"openai-compat@{host}"
        self.vision_model = config.vision_model
        self.text_model = config.text_model
        self.transcribe_model = config.transcribe_model
        self._transport = transport if transport is not None else fixtures_from_env(
            HttpxTransport(config.api_key_ref))
        self._sleeper = sleeper
        self._rng = rng if rng is not None else random.Random()
        self._in_flight = threading.BoundedSemaphore(config.max_in_flight)

    def request_digest(self, req: ChatRequest) -> str:
        return chat_digest(req, self.config.temperature, self.config.seed)

    # -- wire building

    def _wire_messages(self, req: ChatRequest) -> list[dict]:
        wire = []
        for m in req.messages:
            if len(m.parts) == 1 and isinstance(m.parts[0], TextPart):
                wire.append({"role": m.role, "content": m.parts[0].text})
                continue
            content = []
            for p in m.parts:
                if isinstance(p, TextPart):
                    content.append({"type": "text", "text": p.text})
                else:
                    url = "data:image/jpeg;base64," + base64.b64encode(p.image.data).decode("ascii")
                    content.append({"type": "image_url", "image_url": {"url": url}})
            wire.append({"role": m.role, "content": content})
        return wire

    def _chat_call(self, req: ChatRequest) -> ModelText:
        body = {
            "model": req.model,
            "messages": self._wire_messages(req),
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_output_tokens,
        }
        if self.config.seed is not None:
            body["seed"] = self.config.seed
        treq = TransportRequest(
            method="POST", url=f"{self.config.base_url}/chat/completions",
            digest=self.request_digest(req), json_body=body,
            timeout=self.config.request_timeout)
        started = time.monotonic()
        resp = self._send_with_retries(treq)
        latency = int((time.monotonic() - started) * 1000)
        try:
            choice = resp.body["choices"][0]["message"]
            text = choice.get("content") or ""
            usage = resp.body.get("usage") or {}
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"malformed completion response: {exc}") from exc
        return ModelText(text=text,
                         prompt_tokens=int(usage.get("prompt_tokens", 0)),
                         completion_tokens=int(usage.get("completion_tokens", 0)),
                         provider_id=self.provider_id, latency_ms=latency)

    # -- operations

    def vision_complete(self, req: ChatRequest) -> ModelText:
        _validate_chat(req, allow_images=True, max_images=self.config.max_images_per_request)
        return self._chat_call(req)

    def text_complete(self, req: ChatRequest) -> ModelText:
        _validate_chat(req, allow_images=False, max_images=0)
        return self._chat_call(req)

    def transcribe(self, audio: AudioTrack) -> Transcript:
        if len(audio.data) > self.config.max_audio_bytes:
            raise PayloadTooLarge(
                f"audio payload {len(audio.data)} bytes exceeds cap {self.config.max_audio_bytes}")
        treq = TransportRequest(
            method="POST", url=f"{self.config.base_url}/audio/transcriptions",
            digest=transcribe_digest(audio, self.config.transcribe_model),
            files={"file": ("audio.wav", audio.data, "audio/wav")},
            data={"model": self.config.transcribe_model},
            timeout=self.config.request_timeout)
        resp = self._send_with_retries(treq)
        if not isinstance(resp.body, dict) or "text" not in resp.body:
            raise ProviderError("malformed transcription response")
        return Transcript(text=resp.body["text"],
                          language=resp.body.get("language"),
                          duration=float(resp.body.get("duration", audio.duration)))

    # -- retry engine

    def _send_with_retries(self, treq: TransportRequest) -> TransportResponse:
        attempt = 0
        while True:
            timed_out = False
            resp = None
            with self._in_flight:
                try:
                    resp = self._transport(treq)
                except TransportTimeout as exc:
                    timed_out = True
                    last_error: Exception = Timeout(f"{treq.url}: {exc}")
            if resp is not None:
                if 200 <= resp.status < 300:
                    return resp
                if resp.status in (401, 403):
                    raise AuthError(f"{treq.url}: HTTP {resp.status}")
                if resp.status == 429:
                    last_error = RateLimited(f"{treq.url}: HTTP 429 after {attempt + 1} attempts")
                elif resp.status >= 500:
                    last_error = ProviderError(f"{treq.url}: HTTP {resp.status}")
                else:
                    raise ProviderError(f"{treq.url}: HTTP {resp.status}: {resp.text[:300]}")
            if attempt >= self.config.max_retries:
                raise last_error
            delay = min(RETRY_MAX_DELAY, RETRY_BASE_DELAY * (2 ** attempt))
            delay *= 1.0 + RETRY_JITTER * (2.0 * self._rng.random() - 1.0)
            logger.debug("retrying %s (attempt %d, %s) in %.2fs",
                         treq.url, attempt + 1, "timeout" if timed_out else "status", delay)
            self._sleeper(delay)
            attempt += 1


# ---------------------------------------------------------------- mock

_RUBRIC_ITEM_RE = re.compile(r"^\d+\. ", re.M)


def _criteria_under(prompt: str, header: str) -> int:
    """Count canonical '<n>. text' lines directly below a rubric header."""
    pos = prompt.find(header)
    if pos == -1:
        return 0
    count = 0
    for line in prompt[pos + len(header):].lstrip("\n").splitlines():
        if re.match(r"^\d+\. \S", line):
            count += 1
        else:
            break
    return count


class MockGateway:
    """Deterministic offline provider: responses are a pure function of the
    request digest, so identical inputs replay byte-identically."""

    provider_id = "mock"

    def __init__(self, vision_model: str = "mock-vision", text_model: str = "mock-text",
                 transcribe_model: str = "mock-transcribe",
                 max_images_per_request: int = 20, max_audio_bytes: int = 25 * 1024 * 1024):
        self.vision_model = vision_model
        self.text_model = text_model
        self.transcribe_model = transcribe_model
        self.max_images_per_request = max_images_per_request
        self.max_audio_bytes = max_audio_bytes

    def request_digest(self, req: ChatRequest) -> str:
        return chat_digest(req)

    def _score_block(self, marker: str, count: int, seed: int, digest8: str) -> str:
        scores = [(seed + i) % 6 for i in range(1, count + 1)]
        lines = [marker]
        lines += [f"{i}: {s}/5 - mock rationale {digest8}" for i, s in zip(range(1, count + 1), scores)]
        lines.append(f"OVERALL: {round(sum(scores) / len(scores), 1):.1f}/5")
        return "\n".join(lines)

    def _complete(self, req: ChatRequest) -> ModelText:
        digest = self.request_digest(req)
        digest8 = digest[:8]
        seed = int(digest8, 16)
        prompt = req.text_content()
        video_n = _criteria_under(prompt, "VIDEO RUBRIC:")
        audio_n = _criteria_under(prompt, "AUDIO RUBRIC:")
        wants_scores = re.search(r"^SCORES$", prompt, re.M) is not None

        if wants_scores:
            parts = [f"MOCK SUMMARY {digest8}",
                     "Synthesized overview of the observed performance (mock provider).",
                     "",
                     self._score_block("SCORES", max(video_n, 1), seed, digest8)]
            if audio_n and re.search(r"^AUDIO SCORES$", prompt, re.M):
                parts.append("")
                parts.append(self._score_block("AUDIO SCORES", audio_n, seed + 3, digest8))
            text = "\n".join(parts)
        else:
            n = audio_n if (audio_n and not video_n) else max(video_n, audio_n, 1)
            lines = [f"MOCK EVALUATION {digest8}"]
            lines += [f"Criterion {i}: observed (evidence token {digest8}-{i})" for i in range(1, n + 1)]
            text = "\n".join(lines)
        return ModelText(text=text,
                         prompt_tokens=len(prompt) // 4 + 85 * len(req.image_parts()),
                         completion_tokens=len(text) // 4,
                         provider_id=self.provider_id, latency_ms=0)

    def vision_complete(self, req: ChatRequest) -> ModelText:
        _validate_chat(req, allow_images=True, max_images=self.max_images_per_request)
        return self._complete(req)

    def text_complete(self, req: ChatRequest) -> ModelText:
        _validate_chat(req, allow_images=False, max_images=0)
        return self._complete(req)

    def transcribe(self, audio: AudioTrack) -> Transcript:
        if len(audio.data) > self.max_audio_bytes:
            raise PayloadTooLarge(f"audio payload {len(audio.data)} bytes exceeds cap")
        return Transcript(text=f"MOCK TRANSCRIPT {sha256_hex(audio.data)[:8]}",
                          language="en", duration=audio.duration)


def build_gateway(provider: str, config: ProviderConfig | None = None) -> Gateway:
    """'mock' for the offline provider, 'live' for OpenAI-compatible HTTP."""
    if provider == "mock":
        return MockGateway()
    if provider == "live":
        return OpenAICompatGateway(config or ProviderConfig.from_env())
    raise ValueError(f"unknown provider '{provider}' (expected mock|live)")
