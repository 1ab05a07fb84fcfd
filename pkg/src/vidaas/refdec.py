"""Reference media decoder: a small CLI speaking the same invocation contract
as ffmpeg for the three operations this package needs (probe, frame export,
audio export). It exists so deployments without ffmpeg — including the test
environment — can still drive the full subprocess decoding path.

Video decoding is handled by OpenCV (any container OpenCV can open works);
audio extraction supports PCM streams inside AVI containers, which is what
the bundled synthetic-clip writer produces. Production systems should point
VIDAAS_DECODER at a real ffmpeg.
"""

from __future__ import annotations

import io
import re
import struct
import sys
import wave
from dataclasses import dataclass
from pathlib import Path

# cv2/numpy are imported inside the handlers that need them: subprocess
# startup time is the dominant cost of this decoder, and the audio and
# -version paths do not need OpenCV at all.

VERSION_LINE = "vidaas-refdec 1.0 (reference decoder, MJPG/PCM AVI + OpenCV containers)"

_SELECT_INDEX_RE = re.compile(r"eq\(n\\?,(\d+)\)")
_SCALE_RE = re.compile(r"scale=(\d+):(\d+)")

# flags that consume a value token
_VALUED = {"-i", "-vf", "-q:v", "-qscale:v", "-map", "-c", "-c:a", "-c:v", "-acodec",
           "-f", "-ac", "-ar", "-vsync", "-fps_mode"}
_BOOLEAN = {"-y", "-n", "-vn", "-an", "-hide_banner", "-nostdin"}


@dataclass
class Invocation:
    input: str | None = None
    output: str | None = None
    vf: str | None = None
    qscale: int = 3
    fmt: str | None = None
    video_none: bool = False
    out_rate: int | None = None
    out_channels: int | None = None


def _parse_args(args: list[str]) -> Invocation:
    inv = Invocation()
    i = 0
    while i < len(args):
        tok = args[i]
        if tok in _BOOLEAN:
            if tok in ("-vn",):
                inv.video_none = True
            i += 1
        elif tok in _VALUED:
            if i + 1 >= len(args):
                raise ValueError(f"flag {tok} is missing its value")
            val = args[i + 1]
            if tok == "-i":
                inv.input = val
            elif tok == "-vf":
                inv.vf = val
            elif tok in ("-q:v", "-qscale:v"):
                inv.qscale = int(val)
            elif tok == "-f":
                inv.fmt = val
            elif tok == "-ar":
                inv.out_rate = int(val)
            elif tok == "-ac":
                inv.out_channels = int(val)
            i += 2
        elif tok.startswith("-") and tok != "-":
            # unknown flag: assume it consumes a value, like most of ffmpeg's
            i += 2
        else:
            inv.output = tok
            i += 1
    return inv


# ------------------------------------------------------------------ RIFF/AVI

def _walk_riff(data: bytes):
    """Yield (fourcc, list_type_or_None, payload) for top-level AVI chunks,
    recursing one level into LIST chunks where callers need it."""
    if len(data) < 12 or data[:4] != b"RIFF" or data[8:12] != b"AVI ":
        return
    pos = 12
    end = min(len(data), 8 + struct.unpack("<I", data[4:8])[0])
    while pos + 8 <= end:
        fourcc = data[pos:pos + 4]
        size = struct.unpack("<I", data[pos + 4:pos + 8])[0]
        payload = data[pos + 8:pos + 8 + size]
        if fourcc == b"LIST":
            yield fourcc, payload[:4], payload[4:]
        else:
            yield fourcc, None, payload
        pos += 8 + size + (size % 2)


def _walk_chunks(payload: bytes):
    pos = 0
    while pos + 8 <= len(payload):
        fourcc = payload[pos:pos + 4]
        size = struct.unpack("<I", payload[pos + 4:pos + 8])[0]
        yield fourcc, payload[pos + 8:pos + 8 + size]
        pos += 8 + size + (size % 2)


@dataclass
class AviAudio:
    stream_index: int
    channels: int
    sample_rate: int
    bits: int
    codec_tag: int


def find_avi_audio(data: bytes) -> AviAudio | None:
    stream_index = -1
    for fourcc, list_type, payload in _walk_riff(data):
        if fourcc != b"LIST" or list_type != b"hdrl":
            continue
        for sub_fourcc, sub_type, sub_payload in _walk_chunks_with_lists(payload):
            if sub_fourcc == b"LIST" and sub_type == b"strl":
                stream_index += 1
                strh = strf = None
                for c_fourcc, c_payload in _walk_chunks(sub_payload):
                    if c_fourcc == b"strh":
                        strh = c_payload
                    elif c_fourcc == b"strf":
                        strf = c_payload
                if strh and strh[:4] == b"auds" and strf and len(strf) >= 16:
                    tag, channels, rate = struct.unpack("<HHI", strf[:8])
                    bits = struct.unpack("<H", strf[14:16])[0]
                    return AviAudio(stream_index, channels, rate, bits, tag)
    return None


def _walk_chunks_with_lists(payload: bytes):
    pos = 0
    while pos + 8 <= len(payload):
        fourcc = payload[pos:pos + 4]
        size = struct.unpack("<I", payload[pos + 4:pos + 8])[0]
        body = payload[pos + 8:pos + 8 + size]
        if fourcc == b"LIST":
            yield fourcc, body[:4], body[4:]
        else:
            yield fourcc, None, body
        pos += 8 + size + (size % 2)


def read_avi_audio_data(data: bytes, stream_index: int) -> bytes:
    wanted = f"{stream_index:02d}wb".encode("ascii")
    parts = []
    for fourcc, list_type, payload in _walk_riff(data):
        if fourcc == b"LIST" and list_type == b"movi":
            for c_fourcc, c_payload in _walk_chunks(payload):
                if c_fourcc == wanted:
                    parts.append(c_payload)
    return b"".join(parts)


# ------------------------------------------------------------------ commands

def _fmt_fps(fps: float) -> str:
    return str(int(fps)) if float(fps).is_integer() else f"{fps:.2f}"


def _probe(inv: Invocation) -> int:
    import cv2
    path = inv.input
    if not path or not Path(path).exists():
        sys.stderr.write(f"{path}: No such file or directory\n")
        return 1
    cap = cv2.VideoCapture(path)
    if not cap.isOpened():
        sys.stderr.write(f"{path}: Invalid data found when processing input\n")
        return 1
    frames = int(cap.get(cv2.CAP_PROP_FRAME_COUNT))
    fps = cap.get(cv2.CAP_PROP_FPS)
    width = int(cap.get(cv2.CAP_PROP_FRAME_WIDTH))
    height = int(cap.get(cv2.CAP_PROP_FRAME_HEIGHT))
    cap.release()
    if frames < 1 or fps <= 0 or width <= 0 or height <= 0:
        sys.stderr.write(f"{path}: not a decodable video stream\n")
        return 1

    duration = frames / fps
    hh, rem = divmod(duration, 3600)
    mm, ss = divmod(rem, 60)
    lines = [
        f"Input #0, avi, from '{path}':",
        f"  Duration: {int(hh):02d}:{int(mm):02d}:{ss:05.2f}, start: 0.000000, bitrate: N/A",
        f"  Stream #0:0: Video: mjpeg, yuvj420p, {width}x{height}, {_fmt_fps(fps)} fps",
    ]
    audio = find_avi_audio(Path(path).read_bytes())
    if audio is not None:
        lines.append(f"  Stream #0:{audio.stream_index}: Audio: pcm_s16le, "
                     f"{audio.sample_rate} Hz, {audio.channels} channels")
    lines.append("Output #0, null, to 'pipe:':")
    lines.append(f"frame={frames:5d} fps=0.0 Lsize=N/A")
    sys.stderr.write("\n".join(lines) + "\n")
    return 0


def _qscale_to_jpeg_quality(qscale: int) -> int:
    # same direction as ffmpeg's mjpeg qscale: 2 is best, 31 worst
    return max(1, min(100, round(100 - 3.3 * qscale)))


def _export_frames(inv: Invocation) -> int:
    import cv2
    wanted = sorted(int(m) for m in _SELECT_INDEX_RE.findall(inv.vf or ""))
    if not wanted:
        sys.stderr.write("no select=eq(n,...) expression in -vf\n")
        return 1
    scale = None
    m = _SCALE_RE.search(inv.vf or "")
    if m:
        scale = (int(m.group(1)), int(m.group(2)))
    cap = cv2.VideoCapture(inv.input or "")
    if not cap.isOpened():
        sys.stderr.write(f"{inv.input}: Invalid data found when processing input\n")
        return 1
    quality = _qscale_to_jpeg_quality(inv.qscale)
    wanted_set = set(wanted)
    out_serial, frame_index = 0, 0
    last_wanted = wanted[-1]
    while frame_index <= last_wanted:
        ok, frame = cap.read()
        if not ok:
            break
        if frame_index in wanted_set:
            if scale is not None:
                frame = cv2.resize(frame, scale, interpolation=cv2.INTER_AREA)
            out_serial += 1
            out_path = (inv.output or "frame_%06d.jpg") % out_serial
            ok, enc = cv2.imencode(".jpg", frame, [cv2.IMWRITE_JPEG_QUALITY, quality])
            if not ok:
                sys.stderr.write("JPEG encode failed\n")
                return 1
            Path(out_path).write_bytes(enc.tobytes())
        frame_index += 1
    cap.release()
    if out_serial != len(wanted):
        sys.stderr.write(f"only {out_serial} of {len(wanted)} selected frames decodable\n")
        return 1
    sys.stderr.write(f"frame={out_serial:5d} fps=0.0 Lsize=N/A\n")
    return 0


def _export_audio(inv: Invocation) -> int:
    import numpy as np
    path = inv.input
    if not path or not Path(path).exists():
        sys.stderr.write(f"{path}: No such file or directory\n")
        return 1
    data = Path(path).read_bytes()
    audio = find_avi_audio(data)
    if audio is None:
        sys.stderr.write(f"{path}: Output file does not contain any stream\n")
        return 1
    if audio.codec_tag != 1 or audio.bits != 16:
        sys.stderr.write(f"{path}: unsupported audio codec (only 16-bit PCM)\n")
        return 1
    raw = read_avi_audio_data(data, audio.stream_index)
    samples = np.frombuffer(raw, dtype="<i2").astype(np.float64)
    if audio.channels > 1:
        usable = len(samples) - len(samples) % audio.channels
        samples = samples[:usable].reshape(-1, audio.channels).mean(axis=1)
    out_rate = inv.out_rate or 16000
    if audio.sample_rate != out_rate and len(samples) > 1:
        src_t = np.arange(len(samples)) / audio.sample_rate
        n_out = int(round(len(samples) * out_rate / audio.sample_rate))
        dst_t = np.arange(n_out) / out_rate
        samples = np.interp(dst_t, src_t, samples)
    pcm = np.clip(np.round(samples), -32768, 32767).astype("<i2").tobytes()

    buf = io.BytesIO()
    with wave.open(buf, "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(out_rate)
        wf.writeframes(pcm)
    Path(inv.output or "out.wav").write_bytes(buf.getvalue())
    return 0


def main(argv: list[str] | None = None) -> int:
    args = list(sys.argv[1:] if argv is None else argv)
    if "-version" in args or "--version" in args:
        print(VERSION_LINE)
        return 0
    try:
        inv = _parse_args(args)
    except ValueError as exc:
        sys.stderr.write(f"{exc}\n")
        return 1
    if inv.input is None:
        sys.stderr.write("no input file (-i) given\n")
        return 1
    if inv.fmt == "null":
        return _probe(inv)
    if inv.video_none and inv.output and inv.output.lower().endswith(".wav"):
        return _export_audio(inv)
    if inv.output and "%" in inv.output:
        return _export_frames(inv)
    sys.stderr.write("unsupported invocation; see module docstring for the contract\n")
    return 1


if __name__ == "__main__":
    sys.exit(main())
