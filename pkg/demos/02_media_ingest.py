"""Media ingestion: probe, uniform sampling, frame export, batching, audio.

Uses a synthetic clip so the demo runs anywhere; point `CLIP` at a real file
to ingest your own footage (any container your decoder understands).

Run:  python demos/02_media_ingest.py
"""

import tempfile
from pathlib import Path

from vidaas import media, synth
from vidaas.decoder import decoder_version, resolve_decoder

workdir = Path(tempfile.mkdtemp(prefix="vidaas-demo-"))
CLIP = synth.write_clip(workdir / "demo.avi", frame_count=300, fps=10.0,
                        width=320, height=240, with_audio=True)

print(f"decoder: {decoder_version(resolve_decoder())}")

info = media.probe(CLIP)
print(f"probe: {info.duration:.1f}s, {info.frame_count} frames @ {info.fps:g} fps, "
      f"{info.width}x{info.height}, audio={info.has_audio}")

indices = media.sample_indices(info.frame_count, 12)
print(f"uniform sample of 12 from {info.frame_count}: {indices}")

frames = media.extract_frames(CLIP, indices, max_dim=160, info=info)
print("extracted frames (JPEG, downscaled to fit 160px):")
for f in frames.frames[:3]:
    print(f"  index {f.source_index:>3}  t={f.timestamp:5.1f}s  "
          f"{f.image.width}x{f.image.height}  {len(f.image.data)} bytes")
print(f"  ... {len(frames.frames)} total")

batches = media.partition_batches(frames, batch_size=5)
print("batches (each becomes one vision-model call):")
for b in batches:
    print(f"  batch {b.batch_index}: {len(b.frames)} frames, "
          f"{b.span[0]:.1f}-{b.span[1]:.1f}s")

audio = media.extract_audio(CLIP, info=info)
print(f"audio track: {audio.sample_rate} Hz, {audio.channels} ch, "
      f"{audio.duration:.1f}s, {len(audio.data)} bytes WAV")
