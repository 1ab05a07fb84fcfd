"""Small shared helpers: canonical JSON, digests, sortable record ids."""

from __future__ import annotations

import hashlib
import json
from datetime import datetime, timezone
from typing import Any

_CROCKFORD = "0123456789ABCDEFGHJKMNPQRSTVWXYZ"


def canonical_json(obj: Any) -> str:
    """Deterministic JSON: sorted keys, no whitespace, UTF-8 text kept as-is."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), ensure_ascii=False)


def sha256_hex(data: bytes) -> str:
    return hashlib.sha256(data).hexdigest()


def digest_of(obj: Any) -> str:
    """sha256 of the canonical JSON form of `obj`."""
    return sha256_hex(canonical_json(obj).encode("utf-8"))


def utc_now() -> datetime:
    return datetime.now(timezone.utc)


def isoformat_utc(ts: datetime) -> str:
    """Millisecond-precision UTC timestamp, stable across platforms."""
    return ts.astimezone(timezone.utc).strftime("%Y-%m-%dT%H:%M:%S.") + f"{ts.microsecond // 1000:03d}Z"


def parse_utc(text: str) -> datetime:
    return datetime.strptime(text, "%Y-%m-%dT%H:%M:%S.%fZ").replace(tzinfo=timezone.utc)


def sortable_id(ts: datetime, entropy_seed: str) -> str:
    """ULID-style 26-char id: 48-bit millisecond timestamp + 80 entropy bits.

    Entropy is derived from `entropy_seed` (hashed together with the timestamp)
    rather than a RNG so that a pinned clock yields reproducible ids.
    """
    millis = int(ts.timestamp() * 1000)
    seed = hashlib.sha256(f"{millis}:{entropy_seed}".encode("utf-8")).digest()
    value = (millis << 80) | int.from_bytes(seed[:10], "big")
    chars = []
    for _ in range(26):
        chars.append(_CROCKFORD[value & 0x1F])
        value >>= 5
    return "".join(reversed(chars))
