"""Exception taxonomy shared across the package.

Grouped by the subsystem that raises them; the HTTP service maps these onto
status codes in one place, so keep the hierarchy flat and explicit.
"""

from __future__ import annotations


class VidaasError(Exception):
    """Base class for every error this package raises on purpose."""


# ---------------------------------------------------------------- rubrics

class EmptyRubric(VidaasError):
    """Rubric text contained no recognizable criteria."""


class MalformedSheet(VidaasError):
    """Pair-sheet document is syntactically invalid."""


class InvalidPair(VidaasError):
    """A pair in the sheet violates its invariants (e.g. missing audio rubric)."""


class DuplicateName(VidaasError):
    """Two pairs in one sheet share a name."""


# ---------------------------------------------------------------- media

class NotFound(VidaasError):
    """Input file does not exist."""


class UndecodableMedia(VidaasError):
    """File exists but is not a decodable video container."""


class DecoderFailure(VidaasError):
    """External decoder exited non-zero; carries captured diagnostics."""

    def __init__(self, message: str, stderr: str = ""):
        super().__init__(message)
        self.stderr = stderr


# ---------------------------------------------------------------- gateway

class GatewayError(VidaasError):
    """Base for provider-side failures."""


class AuthError(GatewayError):
    """401/403 from the provider; never retried."""


class RateLimited(GatewayError):
    """429 still failing after the retry budget."""


class ProviderError(GatewayError):
    """Semantic 4xx/5xx the gateway will not retry further."""


class Timeout(GatewayError):
    """Transport timeout after retries."""


class PayloadTooLarge(GatewayError):
    """Request rejected locally before transport (size cap)."""


class FixtureMiss(GatewayError):
    """Replay mode had no recorded response for this request digest."""


# ---------------------------------------------------------------- chain

class MissingTranscript(VidaasError):
    """Audio evaluation requested but the asset produced no transcript."""


class MalformedFullResponse(VidaasError):
    """Edited FULL response text does not parse into canonical sections."""


class ScoreParseError(VidaasError):
    """Summarizer output failed score-block validation."""

    def __init__(self, reason: str, missing_ordinals: list[int] | None = None,
                 detail: str = ""):
        super().__init__(f"{reason}: {detail}" if detail else reason)
        self.reason = reason  # "missing_ordinals" | "out_of_range" | "malformed_block"
        self.missing_ordinals = missing_ordinals or []


class PipelineError(VidaasError):
    """A pipeline run aborted; `stage` names the first failing stage."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__(f"stage '{stage}' failed: {cause}")
        self.stage = stage
        self.cause = cause


# ---------------------------------------------------------------- archive

class StorageFull(VidaasError):
    """Backend refused the write for capacity reasons."""


class SerializationError(VidaasError):
    """Record could not be canonically serialized or deserialized."""


class SecretMaterialDetected(VidaasError):
    """Record body matched a configured secret pattern; write refused."""


class UnknownSubject(VidaasError):
    """No records exist for the requested subject id."""


class UnknownRecord(VidaasError):
    """No record with the requested id."""
