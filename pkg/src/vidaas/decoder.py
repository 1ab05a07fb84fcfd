"""External media decoder contract.

All container decoding is delegated to a subprocess so the package never
bundles codecs. The invocation templates below are pinned: any decoder that
understands them (ffmpeg does) can be dropped in.

    probe:   <decoder> -i INPUT -map 0:v:0 -c copy -f null -
    frames:  <decoder> -y -i INPUT -vf select=eq(n\\,A)+eq(n\\,B)[,scale=W:H]
                 -vsync 0 -q:v Q OUTDIR/frame_%06d.jpg
    audio:   <decoder> -y -i INPUT -vn -ac 1 -ar 16000 -c:a pcm_s16le OUT.wav
    version: <decoder> -version

Exit code 0 means success; anything else surfaces as an error with the
captured stderr tail. Resolution order for the decoder command: explicit
argument, the VIDAAS_DECODER environment variable, `ffmpeg` on PATH, then
the bundled reference decoder (vidaas.refdec), which implements the same
contract for MJPG/PCM AVI files.
"""

from __future__ import annotations

import os
import re
import shlex
import shutil
import subprocess
import sys
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

from .errors import DecoderFailure, NotFound, UndecodableMedia

DEFAULT_QSCALE = 3  # decoder quality scale, 2 (best) .. 31
_SUBPROCESS_TIMEOUT = 300

_DURATION_RE = re.compile(r"Duration:\s*(\d+):(\d{2}):(\d{2}(?:\.\d+)?)")
_VIDEO_RE = re.compile(r"Stream #\d+:\d+.*?: Video:.*?(\d{2,5})x(\d{2,5})")
_FPS_RE = re.compile(r"(\d+(?:\.\d+)?)\s*fps")
_AUDIO_RE = re.compile(r"Stream #\d+:\d+.*?: Audio:")
_FRAME_COUNT_RE = re.compile(r"frame=\s*(\d+)")


@dataclass(frozen=True)
class ProbeResult:
    duration: float
    fps: float
    width: int
    height: int
    frame_count: int
    has_audio: bool


def resolve_decoder(decoder_cmd: list[str] | str | None = None) -> list[str]:
    """Return the decoder argv prefix per the resolution order above."""
    if decoder_cmd:
        return shlex.split(decoder_cmd) if isinstance(decoder_cmd, str) else list(decoder_cmd)
    env = os.environ.get("VIDAAS_DECODER")
    if env:
        return shlex.split(env)
    ffmpeg = shutil.which("ffmpeg")
    if ffmpeg:
        return [ffmpeg]
    return [sys.executable, "-m", "vidaas.refdec"]


def _run(cmd: list[str]) -> subprocess.CompletedProcess:
    try:
        return subprocess.run(cmd, capture_output=True, timeout=_SUBPROCESS_TIMEOUT)
    except subprocess.TimeoutExpired as exc:
        raise DecoderFailure(f"decoder timed out: {cmd[0]}", stderr=str(exc)) from exc
    except OSError as exc:
        raise DecoderFailure(f"decoder could not be launched: {cmd[0]}: {exc}") from exc


def _stderr_tail(proc: subprocess.CompletedProcess, limit: int = 2000) -> str:
    text = proc.stderr.decode("utf-8", errors="replace")
    return text[-limit:]


def decoder_version(decoder: list[str]) -> str:
    return _decoder_version_cached(tuple(decoder))


@lru_cache(maxsize=8)
def _decoder_version_cached(decoder: tuple[str, ...]) -> str:
    proc = _run([*decoder, "-version"])
    if proc.returncode != 0:
        raise DecoderFailure("decoder -version failed", stderr=_stderr_tail(proc))
    out = (proc.stdout or proc.stderr).decode("utf-8", errors="replace")
    return out.splitlines()[0].strip() if out.strip() else "unknown"


def run_probe(decoder: list[str], path: str | Path) -> ProbeResult:
    path = Path(path)
    if not path.exists():
        raise NotFound(str(path))
    proc = _run([*decoder, "-i", str(path), "-map", "0:v:0", "-c", "copy", "-f", "null", "-"])
    stderr = proc.stderr.decode("utf-8", errors="replace")
    if proc.returncode != 0:
        raise UndecodableMedia(f"{path}: decoder could not read container\n{stderr[-500:]}")

    # only trust the input section; the null-output section repeats stream lines
    input_section = stderr
    out_pos = stderr.find("Output #")
    if out_pos != -1:
        input_section = stderr[:out_pos]

    dur_m = _DURATION_RE.search(input_section)
    vid_m = _VIDEO_RE.search(input_section)
    fps_m = _FPS_RE.search(input_section[vid_m.start():]) if vid_m else None
    counts = _FRAME_COUNT_RE.findall(stderr)
    if not (dur_m and vid_m and fps_m and counts):
        raise UndecodableMedia(f"{path}: no decodable video stream (still image or unsupported container)")

    duration = int(dur_m.group(1)) * 3600 + int(dur_m.group(2)) * 60 + float(dur_m.group(3))
    fps = float(fps_m.group(1))
    frame_count = int(counts[-1])
    if fps <= 0 or frame_count < 1:
        raise UndecodableMedia(f"{path}: degenerate stream (fps={fps}, frames={frame_count})")
    return ProbeResult(duration=duration, fps=fps,
                       width=int(vid_m.group(1)), height=int(vid_m.group(2)),
                       frame_count=frame_count,
                       has_audio=_AUDIO_RE.search(input_section) is not None)


def run_extract_frames(decoder: list[str], path: str | Path, indices: list[int],
                       outdir: str | Path, scale: tuple[int, int] | None = None,
                       qscale: int = DEFAULT_QSCALE) -> list[Path]:
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    vf = "select=" + "+".join(f"eq(n\\,{i})" for i in indices)
    if scale is not None:
        vf += f",scale={scale[0]}:{scale[1]}"
    pattern = outdir / "frame_%06d.jpg"
    proc = _run([*decoder, "-y", "-i", str(path), "-vf", vf, "-vsync", "0",
                 "-q:v", str(qscale), str(pattern)])
    if proc.returncode != 0:
        raise DecoderFailure(f"{path}: frame export failed", stderr=_stderr_tail(proc))
    produced = sorted(outdir.glob("frame_*.jpg"))
    if len(produced) != len(indices):
        raise DecoderFailure(
            f"{path}: expected {len(indices)} frames, decoder produced {len(produced)}",
            stderr=_stderr_tail(proc))
    return produced


def run_extract_audio(decoder: list[str], path: str | Path, out_wav: str | Path) -> Path:
    out_wav = Path(out_wav)
    proc = _run([*decoder, "-y", "-i", str(path), "-vn", "-ac", "1", "-ar", "16000",
                 "-c:a", "pcm_s16le", str(out_wav)])
    if proc.returncode != 0 or not out_wav.exists():
        raise DecoderFailure(f"{path}: audio export failed", stderr=_stderr_tail(proc))
    return out_wav
