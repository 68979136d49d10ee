"""Inter-agent message envelopes: canonical JSON encoding, validation,
versioning, and provenance tracking.

An envelope is either a request (carries ``task``) or a response (carries
``status`` and usually ``outputs``), never both. Unknown top-level fields
survive a decode/encode round trip via the ``extensions`` map, so older
readers tolerate newer writers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from typing import Any, Mapping

from .model import canonical_json

KNOWN_FIELDS = ("id", "type", "task", "status", "outputs", "assets", "meta")
VALID_STATUSES = ("success", "error")


class ProtocolError(Exception):
    pass


class ParseError(ProtocolError):
    pass


class ValidationFailed(ProtocolError):
    def __init__(self, path: str, message: str) -> None:
        super().__init__(f"{path}: {message}")
        self.path = path


class ProvenanceConflict(ProtocolError):
    pass


@dataclass(frozen=True)
class Envelope:
    """One structured message between agents."""

    id: str
    type: str
    meta: Mapping[str, Any]
    task: Mapping[str, Any] | None = None
    status: str | None = None
    outputs: Mapping[str, Any] | None = None
    assets: Mapping[str, Any] = field(default_factory=dict)
    extensions: Mapping[str, Any] = field(default_factory=dict)

    @property
    def is_request(self) -> bool:
        return self.task is not None

    @property
    def version(self) -> int:
        return int(self.meta["version"])

    @property
    def producer(self) -> str:
        return str(self.meta["producer"])


def validate(envelope: Envelope) -> None:
    """Raise ValidationFailed (naming the offending path) on any bad field."""
    if not isinstance(envelope.id, str) or not envelope.id:
        raise ValidationFailed("id", "must be a non-empty string")
    if not isinstance(envelope.type, str) or not envelope.type:
        raise ValidationFailed("type", "must be a non-empty string")
    if (envelope.task is None) == (envelope.status is None):
        raise ValidationFailed(
            "task", "exactly one of 'task' (request) or 'status' (response) must be present"
        )
    if envelope.task is not None and not isinstance(envelope.task, Mapping):
        raise ValidationFailed("task", "must be an object")
    if envelope.status is not None and envelope.status not in VALID_STATUSES:
        raise ValidationFailed("status", f"must be one of {list(VALID_STATUSES)}")
    if envelope.outputs is not None and not isinstance(envelope.outputs, Mapping):
        raise ValidationFailed("outputs", "must be an object")
    if not isinstance(envelope.assets, Mapping):
        raise ValidationFailed("assets", "must be an object")
    if not isinstance(envelope.meta, Mapping):
        raise ValidationFailed("meta", "must be an object")
    version = envelope.meta.get("version")
    if not isinstance(version, int) or isinstance(version, bool) or version < 1:
        raise ValidationFailed("meta.version", "must be an integer >= 1")
    producer = envelope.meta.get("producer")
    if not isinstance(producer, str) or not producer:
        raise ValidationFailed("meta.producer", "must be a non-empty string")
    for key in envelope.extensions:
        if key in KNOWN_FIELDS:
            raise ValidationFailed(f"extensions.{key}", "collides with a known field")


def encode(envelope: Envelope) -> str:
    """Canonical JSON text: sorted keys, compact separators, UTF-8.

    Encoding the same envelope twice yields byte-identical text; absent
    optional fields are omitted so distinct envelopes encode distinctly.
    """
    validate(envelope)
    body: dict[str, Any] = {"id": envelope.id, "type": envelope.type}
    if envelope.task is not None:
        body["task"] = dict(envelope.task)
    if envelope.status is not None:
        body["status"] = envelope.status
    if envelope.outputs is not None:
        body["outputs"] = _as_plain(envelope.outputs)
    if envelope.assets:
        body["assets"] = _as_plain(envelope.assets)
    body["meta"] = dict(envelope.meta)
    for key, value in envelope.extensions.items():
        body[key] = value
    return canonical_json(body)


def decode(text: str) -> Envelope:
    """Parse and validate canonical (or merely valid) JSON message text."""
    try:
        data = json.loads(text)
    except (json.JSONDecodeError, TypeError) as exc:
        raise ParseError(f"malformed message: {exc}") from exc
    if not isinstance(data, dict):
        raise ValidationFailed("", "message root must be an object")

    missing = [key for key in ("id", "type", "meta") if key not in data]
    if missing:
        raise ValidationFailed(missing[0], "required field is missing")

    extensions = {k: v for k, v in data.items() if k not in KNOWN_FIELDS}
    envelope = Envelope(
        id=data["id"],
        type=data["type"],
        task=data.get("task"),
        status=data.get("status"),
        outputs=data.get("outputs"),
        assets=data.get("assets") or {},
        meta=data["meta"] if isinstance(data["meta"], Mapping) else {},
        extensions=extensions,
    )
    if not isinstance(data["meta"], Mapping):
        raise ValidationFailed("meta", "must be an object")
    validate(envelope)
    return envelope


def _as_plain(value: Any) -> Any:
    if isinstance(value, Mapping):
        return {k: _as_plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_as_plain(v) for v in value]
    return value


@dataclass(frozen=True)
class ProvenanceEntry:
    envelope_id: str
    version: int
    producer: str
    timestamp: int

    def to_dict(self) -> dict[str, Any]:
        return {
            "envelope_id": self.envelope_id,
            "version": self.version,
            "producer": self.producer,
            "timestamp": self.timestamp,
        }


def track_provenance(
    envelope: Envelope, log: tuple[ProvenanceEntry, ...]
) -> tuple[ProvenanceEntry, ...]:
    """Append (id, version, producer) to the chain.

    Re-announcing an identical triple is idempotent; the same (id, version)
    under a different producer is a conflict. Timestamps are logical: the
    chain position at append time.
    """
    validate(envelope)
    for entry in log:
        if entry.envelope_id == envelope.id and entry.version == envelope.version:
            if entry.producer != envelope.producer:
                raise ProvenanceConflict(
                    f"message '{envelope.id}' v{envelope.version} already recorded "
                    f"for producer '{entry.producer}', refusing '{envelope.producer}'"
                )
            return log
    new_entry = ProvenanceEntry(
        envelope_id=envelope.id,
        version=envelope.version,
        producer=envelope.producer,
        timestamp=len(log),
    )
    return log + (new_entry,)


def request_envelope(
    envelope_id: str,
    message_type: str,
    prompt: str,
    requirement: str,
    producer: str,
    version: int = 1,
    assets: Mapping[str, Any] | None = None,
    payload: Mapping[str, Any] | None = None,
) -> Envelope:
    """Build a validated request; structured parameters ride in the
    ``payload`` extension field."""
    extensions: dict[str, Any] = {}
    if payload is not None:
        extensions["payload"] = _as_plain(payload)
    envelope = Envelope(
        id=envelope_id,
        type=message_type,
        task={"prompt": prompt, "requirement": requirement},
        assets=_as_plain(assets) if assets else {},
        meta={"version": version, "producer": producer},
        extensions=extensions,
    )
    validate(envelope)
    return envelope


def response_envelope(
    request: Envelope,
    outputs: Mapping[str, Any],
    producer: str,
    status: str = "success",
) -> Envelope:
    """Build the response matching a request's id/type/version."""
    envelope = Envelope(
        id=request.id,
        type=request.type,
        status=status,
        outputs=_as_plain(outputs),
        meta={"version": request.version, "producer": producer},
    )
    validate(envelope)
    return envelope


def envelope_equal_ignoring_extensions(a: Envelope, b: Envelope) -> bool:
    return replace(a, extensions={}) == replace(b, extensions={})
