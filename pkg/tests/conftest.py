"""Shared fixtures: synthetic clips, gateways, stores, and the acceptance
summary hook that prints one PASS/FAIL line per acceptance criterion."""

from __future__ import annotations

import threading
from datetime import datetime, timezone
from pathlib import Path

import pytest

from vidaas import synth
from vidaas.archive import ArchiveStore
from vidaas.gateway import MockGateway
from vidaas.rubric import Modality, parse_rubric

AUDIO_RUBRIC_TEXT = (
    "1. States the goal of the exercise out loud.\n"
    "2. Names at least one safety precaution.\n"
    "3. Invites questions from the audience.\n"
)


@pytest.fixture(scope="session")
def clips(tmp_path_factory) -> dict[str, Path]:
    base = tmp_path_factory.mktemp("clips")
    paths = {
        "av": synth.write_clip(base / "av.avi", frame_count=120, fps=10.0, with_audio=True),
        "video_only": synth.write_clip(base / "video_only.avi", frame_count=120, fps=10.0),
        "long": synth.write_clip(base / "long.avi", frame_count=300, fps=10.0, with_audio=True),
        "tiny": synth.write_clip(base / "tiny.avi", frame_count=3, fps=10.0),
        "large_dims": synth.write_clip(base / "large.avi", frame_count=8, fps=4.0,
                                       width=1920, height=1080),
    }
    corrupt = base / "corrupt.avi"
    corrupt.write_bytes(b"RIFFgarbage-not-a-real-container" * 64)
    paths["corrupt"] = corrupt
    import cv2
    import numpy as np
    still = base / "still.jpg"
    ok, enc = cv2.imencode(".jpg", np.zeros((32, 32, 3), np.uint8))
    assert ok
    still.write_bytes(enc.tobytes())
    paths["still"] = still
    return paths


@pytest.fixture
def mock_gw() -> MockGateway:
    return MockGateway()


@pytest.fixture
def store(tmp_path) -> ArchiveStore:
    return ArchiveStore(tmp_path / "archive.sqlite")


@pytest.fixture
def audio_rubric():
    return parse_rubric(AUDIO_RUBRIC_TEXT, Modality.AUDIO, title="spoken-safety")


def fixed_clock(iso: str = "2026-03-01T10:00:00.000Z"):
    """A clock pinned to one instant; makes pipeline runs pure functions."""
    from vidaas.util import parse_utc
    instant = parse_utc(iso)
    return lambda: instant


class SteppingClock:
    """Strictly increasing clock for ordering tests; one second per call."""

    def __init__(self, start: str = "2026-03-01T10:00:00.000Z"):
        from vidaas.util import parse_utc
        self._current = parse_utc(start)
        self._lock = threading.Lock()

    def __call__(self) -> datetime:
        from datetime import timedelta
        with self._lock:
            value = self._current
            self._current = self._current + timedelta(seconds=1)
        return value


# ---------------------------------------------------------------- acceptance

_acceptance_results: list[tuple[str, str]] = []


def pytest_runtest_logreport(report):
    if report.when != "call" or "test_acceptance" not in report.nodeid:
        return
    name = report.nodeid.split("::")[-1]
    _acceptance_results.append((name, "PASS" if report.passed else "FAIL"))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.write_line("")
    terminalreporter.write_line("acceptance criteria:")
    for name, outcome in _acceptance_results:
        terminalreporter.write_line(f"  [{outcome}] {name}")
