"""The whole chain, offline: frame batches -> partial evaluations -> editable
FULL response -> summarizer -> per-criterion scores.

The mock provider is deterministic, so you can rerun this and diff nothing.
Swap MockGateway for a live gateway (see README) to assess real footage.

Run:  python demos/03_mock_pipeline.py
"""

import tempfile
from pathlib import Path

from vidaas import synth
from vidaas.chain import (EvaluationSpec, FrameParams, apply_edits,
                          serialize_full_response, summarize)
from vidaas.gateway import MockGateway
from vidaas.pipeline import run_pipeline
from vidaas.rubric import Modality, MultimodalMode, load_template, parse_rubric

workdir = Path(tempfile.mkdtemp(prefix="vidaas-demo-"))
clip = synth.write_clip(workdir / "lesson.avi", frame_count=240, fps=12.0, with_audio=True)

spec = EvaluationSpec(
    video_rubric=load_template("forward_roll"),
    audio_rubric=parse_rubric(
        "1. Explains what a forward roll is for.\n"
        "2. Mentions protecting the head and neck.\n"
        "3. Encourages the learner.", Modality.AUDIO),
    mode=MultimodalMode.VIDEO_AUDIO,
    frame_params=FrameParams(requested=12, batch_size=6, max_dim=512),
    subject_id="demo-student")

gw = MockGateway()
record = run_pipeline(clip, spec, gw)

print("FULL response (the human-editable checkpoint):")
print(serialize_full_response(record.full_response))

print("Final narrative:")
print("  " + record.final.narrative.replace("\n", "\n  "))
print("\nScores (video rubric):")
for e in record.final.scores.entries:
    print(f"  {e.ordinal}: {e.score}/5 - {e.rationale}")
print(f"  overall {record.final.scores.overall:.1f}/5")
print("Scores (audio rubric):")
for e in record.final.audio_scores.entries:
    print(f"  {e.ordinal}: {e.score}/5 - {e.rationale}")

print("\nNow a teacher edits one section before summarizing:")
edited = apply_edits(record.full_response, serialize_full_response(
    record.full_response).replace("MOCK EVALUATION", "CORRECTED BY TEACHER", 1))
final2 = summarize(edited, spec, gw)
print(f"  summary prompt digest before edit: {record.final.prompt_digest[:12]}...")
print(f"  summary prompt digest after edit:  {final2.prompt_digest[:12]}...")
print("  (the edit provably reached the summarizer)")
