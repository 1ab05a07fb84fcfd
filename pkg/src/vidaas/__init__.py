"""Provider-agnostic rubric-based observational assessment of videos.

The pipeline: sample frames from a video, evaluate each frame batch with a
vision model against a teacher-authored rubric, evaluate the transcript when
audio is in scope, let a human review and edit the assembled partial
evaluations, then summarize into one bounded score per criterion. Records of
every run are archived for longitudinal progress views.
"""

__version__ = "0.1.0"
