"""Longitudinal archive: three assessments over time, a progress series per
criterion, and irreversible redaction that keeps the learning curve.

Run:  python demos/04_longitudinal.py
"""

import tempfile
from pathlib import Path

from vidaas import synth
from vidaas.archive import ArchiveStore
from vidaas.chain import EvaluationSpec, FrameParams
from vidaas.gateway import MockGateway
from vidaas.pipeline import PipelineConfig, run_pipeline
from vidaas.rubric import MultimodalMode, load_template

workdir = Path(tempfile.mkdtemp(prefix="vidaas-demo-"))
store = ArchiveStore(workdir / "archive.sqlite")
gw = MockGateway()

print("Three sessions, one subject (different frame counts stand in for")
print("different footage, which also varies the mock's scores):")
for session, requested in enumerate((6, 9, 12), start=1):
    clip = synth.write_clip(workdir / f"session{session}.avi",
                            frame_count=60 * session, fps=10.0)
    spec = EvaluationSpec(video_rubric=load_template("fire_extinguisher"),
                          audio_rubric=None, mode=MultimodalMode.VIDEO_ONLY,
                          frame_params=FrameParams(requested, 3, 256),
                          subject_id="student-42")
    record = run_pipeline(clip, spec, gw, PipelineConfig())
    store.save_record(record)
    print(f"  session {session}: overall {record.final.scores.overall:.1f}/5 "
          f"(record {record.record_id[:10]}...)")

print("\nOverall progress series:")
for p in store.progress_series("student-42").points:
    print(f"  {p.created_at:%Y-%m-%d %H:%M:%S}  {p.score:.1f}/5")

print("\nCriterion 4 only ('Stand 2-3 meters away from the fire'):")
for p in store.progress_series("student-42", criterion_ordinal=4).points:
    print(f"  {p.created_at:%Y-%m-%d %H:%M:%S}  {p.score:.0f}/5")

print("\nRedacting the subject (images and audio deleted, scores kept):")
touched = store.redact_subject("student-42")
token = store.list_records()[0].subject_id
print(f"  {touched} records redacted; new token: {token}")
print(f"  series still available: "
      f"{[p.score for p in store.progress_series(token).points]}")
print(f"  records under the old id: {store.list_records(subject_id='student-42')}")
