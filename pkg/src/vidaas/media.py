"""Video ingestion: probe containers, sample frames uniformly, encode them
for model transport, partition into batches, and pull the audio track.

Everything here is deterministic given the same file bytes, parameters and
pinned decoder, which is what makes the downstream pipeline replayable.
"""

from __future__ import annotations

import io
import struct
import tempfile
import threading
import wave
from dataclasses import dataclass
from pathlib import Path

from . import decoder as dec
from .errors import DecoderFailure
from .util import sha256_hex

DEFAULT_REQUESTED_FRAMES = 12
DEFAULT_BATCH_SIZE = 6
DEFAULT_MAX_DIM = 768


@dataclass(frozen=True)
class MediaInfo:
    duration: float
    frame_count: int
    fps: float
    has_audio: bool
    width: int
    height: int

    def __post_init__(self):
        if self.fps <= 0:
            raise ValueError(f"fps must be positive, got {self.fps}")
        if self.frame_count > 0 and (self.width <= 0 or self.height <= 0):
            raise ValueError("dimensions must be positive for a non-empty stream")
        # container metadata must be self-consistent within about one frame
        if self.frame_count > 0 and abs(self.duration * self.fps - self.frame_count) > self.fps * 0.2 + 1.5:
            raise ValueError(
                f"inconsistent metadata: duration {self.duration}s x fps {self.fps} "
                f"vs frame_count {self.frame_count}")


@dataclass(frozen=True)
class EncodedImage:
    data: bytes
    width: int
    height: int
    format: str = "jpeg"

    @property
    def digest(self) -> str:
        return sha256_hex(self.data)


@dataclass(frozen=True)
class Frame:
    source_index: int
    timestamp: float
    image: EncodedImage


@dataclass(frozen=True)
class FrameSet:
    frames: tuple[Frame, ...]
    source: str
    requested: int
    max_dim: int

    def __post_init__(self):
        indices = [f.source_index for f in self.frames]
        if any(b <= a for a, b in zip(indices, indices[1:])):
            raise ValueError("frame source indices must be strictly increasing")


@dataclass(frozen=True)
class FrameBatch:
    batch_index: int
    frames: tuple[Frame, ...]
    span: tuple[float, float]

    def __post_init__(self):
        if not self.frames:
            raise ValueError("a frame batch cannot be empty")


@dataclass(frozen=True)
class AudioTrack:
    data: bytes  # complete PCM WAV payload
    sample_rate: int
    channels: int
    duration: float

    @property
    def digest(self) -> str:
        return sha256_hex(self.data)


_probe_cache: dict[tuple, MediaInfo] = {}
_probe_cache_lock = threading.Lock()


def probe(path: str | Path, decoder_cmd: list[str] | None = None) -> MediaInfo:
    """Read container metadata through the external decoder.

    Results are cached per (path, size, mtime, decoder): metadata of an
    unchanged file is immutable, and decoder subprocess startup is the
    dominant cost when the same asset is probed repeatedly.
    """
    decoder = dec.resolve_decoder(decoder_cmd)
    path = Path(path)
    try:
        stat = path.stat()
        key = (str(path.resolve()), stat.st_size, stat.st_mtime_ns, tuple(decoder))
    except OSError:
        key = None
    if key is not None:
        with _probe_cache_lock:
            cached = _probe_cache.get(key)
        if cached is not None:
            return cached
    r = dec.run_probe(decoder, path)
    info = MediaInfo(duration=r.duration, frame_count=r.frame_count, fps=r.fps,
                     has_audio=r.has_audio, width=r.width, height=r.height)
    if key is not None:
        with _probe_cache_lock:
            if len(_probe_cache) > 256:
                _probe_cache.clear()
            _probe_cache[key] = info
    return info


def sample_indices(frame_count: int, requested: int) -> list[int]:
    """Uniform temporal sampling over [0, frame_count).

    n = min(requested, frame_count). A single sample lands on the middle
    frame; otherwise index_i = round_half_up(i * (frame_count-1) / (n-1)),
    which pins the first sample to 0 and the last to frame_count-1. Integer
    arithmetic throughout, so results are exact.
    """
    if frame_count < 1 or requested < 1:
        raise ValueError("frame_count and requested must both be >= 1")
    n = min(requested, frame_count)
    if n == 1:
        return [(frame_count - 1) // 2]
    span, steps = frame_count - 1, n - 1
    # round_half_up(p/q) == (2p + q) // (2q) for non-negative integers
    return [(2 * i * span + steps) // (2 * steps) for i in range(n)]


def _fit_within(width: int, height: int, max_dim: int) -> tuple[int, int] | None:
    longest = max(width, height)
    if longest <= max_dim:
        return None
    factor = max_dim / longest
    return max(1, round(width * factor)), max(1, round(height * factor))


def _jpeg_size(data: bytes) -> tuple[int, int]:
    """Width/height from JPEG SOF marker, without a full decode."""
    if data[:2] != b"\xff\xd8":
        raise ValueError("not a JPEG payload")
    pos = 2
    while pos + 4 <= len(data):
        if data[pos] != 0xFF:
            pos += 1
            continue
        marker = data[pos + 1]
        if 0xC0 <= marker <= 0xCF and marker not in (0xC4, 0xC8, 0xCC):
            h, w = struct.unpack(">HH", data[pos + 5:pos + 9])
            return w, h
        if marker in (0xD8, 0x01) or 0xD0 <= marker <= 0xD7:
            pos += 2
            continue
        seg_len = struct.unpack(">H", data[pos + 2:pos + 4])[0]
        pos += 2 + seg_len
    raise ValueError("no SOF marker found in JPEG payload")


def extract_frames(path: str | Path, indices: list[int], max_dim: int = DEFAULT_MAX_DIM,
                   decoder_cmd: list[str] | None = None,
                   qscale: int = dec.DEFAULT_QSCALE,
                   info: MediaInfo | None = None) -> FrameSet:
    """Export the chosen frame indices as JPEG, downscaled to fit max_dim."""
    decoder = dec.resolve_decoder(decoder_cmd)
    if info is None:
        info = probe(path, decoder)
    scale = _fit_within(info.width, info.height, max_dim)
    frames: list[Frame] = []
    with tempfile.TemporaryDirectory(prefix="vidaas-frames-") as tmp:
        files = dec.run_extract_frames(decoder, path, indices, tmp, scale=scale, qscale=qscale)
        for index, file in zip(indices, files):
            data = file.read_bytes()
            try:
                w, h = _jpeg_size(data)
            except ValueError as exc:
                raise DecoderFailure(f"{path}: decoder produced a non-JPEG frame file: {exc}") from exc
            frames.append(Frame(source_index=index, timestamp=index / info.fps,
                                image=EncodedImage(data=data, width=w, height=h)))
    return FrameSet(frames=tuple(frames), source=str(path),
                    requested=len(indices), max_dim=max_dim)


def partition_batches(fs: FrameSet, batch_size: int = DEFAULT_BATCH_SIZE) -> list[FrameBatch]:
    """Split a FrameSet into order-preserving batches; only the last may be short."""
    if batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    if not fs.frames:
        raise ValueError("cannot partition an empty FrameSet")
    batches = []
    for b, start in enumerate(range(0, len(fs.frames), batch_size)):
        chunk = fs.frames[start:start + batch_size]
        batches.append(FrameBatch(batch_index=b, frames=chunk,
                                  span=(chunk[0].timestamp, chunk[-1].timestamp)))
    return batches


def extract_audio(path: str | Path, decoder_cmd: list[str] | None = None,
                  info: MediaInfo | None = None) -> AudioTrack | None:
    """16 kHz mono WAV when the container has an audio stream, else None."""
    decoder = dec.resolve_decoder(decoder_cmd)
    if info is None:
        info = probe(path, decoder)
    if not info.has_audio:
        return None
    with tempfile.TemporaryDirectory(prefix="vidaas-audio-") as tmp:
        out = dec.run_extract_audio(decoder, path, Path(tmp) / "audio.wav")
        data = out.read_bytes()
    with wave.open(io.BytesIO(data), "rb") as wf:
        rate = wf.getframerate()
        channels = wf.getnchannels()
        duration = wf.getnframes() / rate if rate else 0.0
    return AudioTrack(data=data, sample_rate=rate, channels=channels, duration=duration)
