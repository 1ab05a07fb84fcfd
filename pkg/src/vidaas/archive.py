"""Immutable assessment archive on an embedded single-file SQLite store.

Records are stored as canonical JSON rows; frame images and audio live in a
content-addressed blob table referenced per record, so redaction is
O(records-of-subject) and identical media is deduplicated. Writes are
serialized through one lock (single-writer), reads open their own
connections (multi-reader).
"""

from __future__ import annotations

import json
import re
import secrets
import sqlite3
import threading
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path

from .errors import (SecretMaterialDetected, SerializationError, StorageFull,
                     UnknownRecord, UnknownSubject)
from .records import AssessmentRecord, canonical_record_json, record_from_dict, spec_digest
from .util import isoformat_utc

DEFAULT_SECRET_PATTERNS = (
    r"sk-[A-Za-z0-9_\-]{16,}",
    r"(?i)\bbearer\s+[A-Za-z0-9._\-]{16,}",
    r"(?i)\bapi[-_]?key\b\s*[:=]\s*[\"']?[A-Za-z0-9._\-]{8,}",
)

_SCHEMA = """
CREATE TABLE IF NOT EXISTS records (
    record_id   TEXT PRIMARY KEY,
    subject_id  TEXT NOT NULL,
    created_at  TEXT NOT NULL,
    asset_digest TEXT NOT NULL,
    spec_digest TEXT NOT NULL,
    rerun       INTEGER NOT NULL,
    body        TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS idx_records_subject ON records(subject_id, created_at);
CREATE TABLE IF NOT EXISTS blobs (
    digest  TEXT PRIMARY KEY,
    payload BLOB NOT NULL
);
CREATE TABLE IF NOT EXISTS blob_refs (
    record_id TEXT NOT NULL,
    digest    TEXT NOT NULL,
    PRIMARY KEY (record_id, digest)
);
"""


@dataclass(frozen=True)
class RecordSummary:
    record_id: str
    subject_id: str
    created_at: datetime
    asset_digest: str
    mode: str
    overall: float
    criterion_count: int
    rerun: bool
    edited: bool


@dataclass(frozen=True)
class ProgressPoint:
    created_at: datetime
    score: float
    record_id: str


@dataclass(frozen=True)
class ProgressSeries:
    subject_id: str
    criterion_ordinal: int | None
    points: tuple[ProgressPoint, ...]


class ArchiveStore:
    def __init__(self, path: str | Path, secret_patterns: tuple[str, ...] = DEFAULT_SECRET_PATTERNS):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._write_lock = threading.Lock()
        self._secret_res = [re.compile(p) for p in secret_patterns]
        with self._connect() as conn:
            conn.executescript(_SCHEMA)

    def _connect(self) -> sqlite3.Connection:
        conn = sqlite3.connect(self.path, timeout=30.0)
        conn.execute("PRAGMA journal_mode=WAL")
        return conn

    def _scan_secrets(self, text: str):
        for pattern in self._secret_res:
            m = pattern.search(text)
            if m:
                raise SecretMaterialDetected(
                    f"record body matches secret pattern {pattern.pattern!r} "
                    f"near offset {m.start()}; refusing to store")

    # ------------------------------------------------------------- writes

    def save_record(self, record: AssessmentRecord) -> str:
        with self._write_lock:
            sdig = spec_digest(record.spec)
            with self._connect() as conn:
                dup = conn.execute(
                    "SELECT 1 FROM records WHERE subject_id=? AND asset_digest=? AND spec_digest=? LIMIT 1",
                    (record.subject_id, record.asset_digest, sdig)).fetchone()
                record.rerun = bool(dup)
                body = canonical_record_json(record)
                self._scan_secrets(body)
                try:
                    conn.execute(
                        "INSERT INTO records (record_id, subject_id, created_at, asset_digest, spec_digest, rerun, body) "
                        "VALUES (?,?,?,?,?,?,?)",
                        (record.record_id, record.subject_id, isoformat_utc(record.created_at),
                         record.asset_digest, sdig, int(record.rerun), body))
                    for digest, payload in record.blobs.items():
                        conn.execute("INSERT OR IGNORE INTO blobs (digest, payload) VALUES (?,?)",
                                     (digest, payload))
                        conn.execute("INSERT OR IGNORE INTO blob_refs (record_id, digest) VALUES (?,?)",
                                     (record.record_id, digest))
                except sqlite3.IntegrityError as exc:
                    raise SerializationError(f"record_id collision for {record.record_id}") from exc
                except sqlite3.OperationalError as exc:
                    if "full" in str(exc).lower():
                        raise StorageFull(str(exc)) from exc
                    raise
        return record.record_id

    def redact_subject(self, subject_id: str) -> int:
        """Replace the subject id with an irreversible token everywhere and
        drop stored media payloads. Scores and narratives survive."""
        with self._write_lock, self._connect() as conn:
            rows = conn.execute(
                "SELECT record_id, body FROM records WHERE subject_id=?",
                (subject_id,)).fetchall()
            if not rows:
                return 0
            token = "redacted-" + secrets.token_hex(6)
            for record_id, body in rows:
                doc = json.loads(body)
                doc["subject_id"] = token
                doc["spec"]["subject_id"] = token
                doc["media"] = None
                conn.execute("UPDATE records SET subject_id=?, body=? WHERE record_id=?",
                             (token, json.dumps(doc, sort_keys=True,
                                                separators=(",", ":"), ensure_ascii=False),
                              record_id))
                conn.execute("DELETE FROM blob_refs WHERE record_id=?", (record_id,))
            conn.execute("DELETE FROM blobs WHERE digest NOT IN (SELECT digest FROM blob_refs)")
            return len(rows)

    # ------------------------------------------------------------- reads

    def load_record(self, record_id: str) -> AssessmentRecord:
        with self._connect() as conn:
            row = conn.execute("SELECT body FROM records WHERE record_id=?",
                               (record_id,)).fetchone()
        if row is None:
            raise UnknownRecord(record_id)
        return record_from_dict(json.loads(row[0]))

    def load_media(self, record_id: str) -> dict[str, bytes]:
        with self._connect() as conn:
            if conn.execute("SELECT 1 FROM records WHERE record_id=?", (record_id,)).fetchone() is None:
                raise UnknownRecord(record_id)
            rows = conn.execute(
                "SELECT b.digest, b.payload FROM blob_refs r JOIN blobs b ON b.digest = r.digest "
                "WHERE r.record_id=?", (record_id,)).fetchall()
        return {digest: payload for digest, payload in rows}

    def _summary(self, body: str, rerun: int) -> RecordSummary:
        doc = json.loads(body)
        scores = doc["final"]["scores"]
        return RecordSummary(
            record_id=doc["record_id"], subject_id=doc["subject_id"],
            created_at=_parse_created(doc["created_at"]),
            asset_digest=doc["asset_digest"], mode=doc["spec"]["mode"],
            overall=scores["overall"], criterion_count=len(scores["entries"]),
            rerun=bool(rerun), edited=doc["full_response"]["edited"])

    def list_records(self, subject_id: str | None = None,
                     since: datetime | None = None,
                     until: datetime | None = None) -> list[RecordSummary]:
        query = "SELECT body, rerun FROM records"
        clauses, params = [], []
        if subject_id is not None:
            clauses.append("subject_id=?")
            params.append(subject_id)
        if since is not None:
            clauses.append("created_at>=?")
            params.append(isoformat_utc(since))
        if until is not None:
            clauses.append("created_at<=?")
            params.append(isoformat_utc(until))
        if clauses:
            query += " WHERE " + " AND ".join(clauses)
        query += " ORDER BY created_at ASC, record_id ASC"
        with self._connect() as conn:
            rows = conn.execute(query, params).fetchall()
        return [self._summary(body, rerun) for body, rerun in rows]

    def progress_series(self, subject_id: str,
                        criterion_ordinal: int | None = None) -> ProgressSeries:
        """Overall score per record, or one criterion's score when an ordinal
        is given (records lacking that ordinal are skipped)."""
        with self._connect() as conn:
            rows = conn.execute(
                "SELECT body FROM records WHERE subject_id=? ORDER BY created_at ASC, record_id ASC",
                (subject_id,)).fetchall()
        if not rows:
            raise UnknownSubject(subject_id)
        points = []
        for (body,) in rows:
            doc = json.loads(body)
            scores = doc["final"]["scores"]
            if criterion_ordinal is None:
                value = scores["overall"]
            else:
                match = [e["score"] for e in scores["entries"] if e["ordinal"] == criterion_ordinal]
                if not match:
                    continue
                value = float(match[0])
            points.append(ProgressPoint(created_at=_parse_created(doc["created_at"]),
                                        score=value, record_id=doc["record_id"]))
        return ProgressSeries(subject_id=subject_id, criterion_ordinal=criterion_ordinal,
                              points=tuple(points))

    def export_records(self, subject_id: str | None = None,
                       with_media: bool = False) -> list[dict]:
        """Canonical record dicts, optionally with base64 media payloads."""
        import base64
        summaries = self.list_records(subject_id=subject_id)
        out = []
        with self._connect() as conn:
            for s in summaries:
                row = conn.execute("SELECT body FROM records WHERE record_id=?",
                                   (s.record_id,)).fetchone()
                doc = json.loads(row[0])
                if with_media:
                    payloads = self.load_media(s.record_id)
                    doc["blob_payloads"] = {d: base64.b64encode(p).decode("ascii")
                                            for d, p in sorted(payloads.items())}
                out.append(doc)
        return out


def _parse_created(text: str) -> datetime:
    from .util import parse_utc
    return parse_utc(text)
