"""Synthetic test clips: a minimal AVI muxer producing MJPG video with an
optional interleaved 16-bit PCM audio stream.

Used by the test suite and the demo scripts so every media-path check runs
offline against files whose exact content is known. Output is byte-stable:
the same parameters always produce the same file.
"""

from __future__ import annotations

import struct
from pathlib import Path

import cv2
import numpy as np


def _chunk(fourcc: bytes, payload: bytes) -> bytes:
    data = struct.pack("<4sI", fourcc, len(payload)) + payload
    if len(payload) % 2:
        data += b"\x00"  # RIFF chunks are word-aligned
    return data


def _list(list_type: bytes, payload: bytes) -> bytes:
    return _chunk(b"LIST", list_type + payload)


def render_frame(index: int, width: int, height: int) -> np.ndarray:
    """Deterministic BGR frame whose content encodes its index."""
    img = np.zeros((height, width, 3), np.uint8)
    img[:, :, 0] = (index * 7) % 256
    img[:, :, 1] = (index * 13 + 31) % 256
    img[index % height, :, 2] = 255  # marker row at row (index mod height)
    return img


def tone_pcm(duration: float, sample_rate: int = 16000, tone_hz: float = 440.0) -> bytes:
    """Mono sine tone as little-endian signed 16-bit samples."""
    t = np.arange(int(round(sample_rate * duration))) / sample_rate
    return (np.sin(2 * np.pi * tone_hz * t) * 12000.0).astype("<i2").tobytes()


def mux_avi(frames_jpeg: list[bytes], fps: float, width: int, height: int,
            audio_pcm: bytes | None = None, sample_rate: int = 16000) -> bytes:
    """Assemble an AVI from pre-encoded JPEG frames and optional PCM audio."""
    n = len(frames_jpeg)
    if n == 0:
        raise ValueError("need at least one frame")
    max_jpeg = max(len(j) for j in frames_jpeg)
    us_per_frame = int(round(1_000_000 / fps))
    v_scale, v_rate = 100, int(round(fps * 100))

    avih = struct.pack("<14I", us_per_frame, 0, 0, 0x10, n, 0,
                       2 if audio_pcm is not None else 1,
                       max_jpeg, width, height, 0, 0, 0, 0)
    strh_v = struct.pack("<4s4sIHHIIIIIIII4H", b"vids", b"MJPG", 0, 0, 0, 0,
                         v_scale, v_rate, 0, n, max_jpeg, 0xFFFFFFFF, 0,
                         0, 0, width, height)
    strf_v = struct.pack("<IiiHH4sIiiII", 40, width, height, 1, 24, b"MJPG",
                         width * height * 3, 0, 0, 0, 0)
    hdrl = _chunk(b"avih", avih) + _list(b"strl", _chunk(b"strh", strh_v) + _chunk(b"strf", strf_v))

    samples_per_frame = 0
    if audio_pcm is not None:
        total_samples = len(audio_pcm) // 2
        samples_per_frame = int(round(sample_rate / fps))
        strh_a = struct.pack("<4s4sIHHIIIIIIII4H", b"auds", b"\x00\x00\x00\x00", 0, 0, 0, 0,
                             1, sample_rate, 0, total_samples,
                             samples_per_frame * 8, 0xFFFFFFFF, 2, 0, 0, 0, 0)
        strf_a = struct.pack("<HHIIHH", 1, 1, sample_rate, sample_rate * 2, 2, 16)
        hdrl += _list(b"strl", _chunk(b"strh", strh_a) + _chunk(b"strf", strf_a))

    movi_payload = b""
    idx_entries: list[tuple[bytes, int, int, int]] = []
    for i, jpg in enumerate(frames_jpeg):
        idx_entries.append((b"00dc", 0x10, len(movi_payload) + 4, len(jpg)))
        movi_payload += _chunk(b"00dc", jpg)
        if audio_pcm is not None:
            start = i * samples_per_frame * 2
            end = len(audio_pcm) if i == n - 1 else min(len(audio_pcm), (i + 1) * samples_per_frame * 2)
            blob = audio_pcm[start:end]
            if blob:
                idx_entries.append((b"01wb", 0x10, len(movi_payload) + 4, len(blob)))
                movi_payload += _chunk(b"01wb", blob)

    movi = _list(b"movi", movi_payload)
    idx1 = _chunk(b"idx1", b"".join(
        struct.pack("<4sIII", f, fl, off, size) for f, fl, off, size in idx_entries))
    return _chunk(b"RIFF", b"AVI " + _list(b"hdrl", hdrl) + movi + idx1)


def write_clip(path: str | Path, frame_count: int = 300, fps: float = 10.0,
               width: int = 64, height: int = 48, with_audio: bool = False,
               tone_hz: float = 440.0, jpeg_quality: int = 90) -> Path:
    """Write a deterministic synthetic clip; returns the path."""
    frames = []
    for i in range(frame_count):
        ok, enc = cv2.imencode(".jpg", render_frame(i, width, height),
                               [cv2.IMWRITE_JPEG_QUALITY, jpeg_quality])
        if not ok:
            raise RuntimeError("JPEG encoding failed")
        frames.append(enc.tobytes())
    pcm = tone_pcm(frame_count / fps, tone_hz=tone_hz) if with_audio else None
    path = Path(path)
    path.write_bytes(mux_avi(frames, fps, width, height, audio_pcm=pcm))
    return path
