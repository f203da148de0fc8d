"""Shared message types, subject naming and the two wire codecs.

Everything services exchange is a :class:`Thing` bound to a hierarchical
:class:`Subject`.  Inter-service traffic uses the binary (MessagePack)
codec; JSON is provided for web-facing consumers.  Both codecs put the
timestamp on the wire as integer milliseconds since the Unix epoch.

Wire schemas
------------
JSON: ``{"machine": str, "name": str, "value": int|float|bool|str,
"timestamp": int, "unit": str|null}`` with exactly those keys, in that
order.

Binary: a MessagePack map with the same keys; ``value`` is an explicitly
tagged union ``{"type": "integer"|"float"|"boolean"|"text", "value": ...}``
so the numeric tag survives decoders (notably JavaScript ones) that
collapse integral floats and integers.

Decoders ignore unknown extra keys, so services built against an older
data model keep working with newer producers.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone
from enum import Enum
from typing import Union

from pydantic import BaseModel, ConfigDict, StrictBool, StrictFloat, StrictInt, StrictStr
from pydantic import ValidationError, field_validator

from fastiiot import mpack
from fastiiot.errors import FastIIoTError

TOKEN_RE = re.compile(r"^[A-Za-z0-9_-]+$")

_EPOCH = datetime(1970, 1, 1, tzinfo=timezone.utc)
_MS = timedelta(milliseconds=1)
_INT64_MIN = -(2**63)
_INT64_MAX = 2**63 - 1
_MAX_TEXT_BYTES = 64 * 1024
_MAX_SUBJECT_BYTES = 255
_MAX_FUTURE = timedelta(hours=24)

Value = Union[bool, int, float, str]


class InvalidSegment(FastIIoTError, ValueError):
    """A subject segment is empty, contains ``.``/whitespace, or is otherwise illegal."""


class MalformedPayload(FastIIoTError, ValueError):
    """Payload bytes do not decode under the declared format."""


class SchemaViolation(FastIIoTError, ValueError):
    """Payload decoded, but a required field is missing or ill-typed."""


class Format(str, Enum):
    BINARY = "binary"
    JSON = "json"


def value_kind(value: Value) -> str:
    """Classify a value into its wire tag. bool is checked before int on purpose."""
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, int):
        return "integer"
    if isinstance(value, float):
        return "float"
    if isinstance(value, str):
        return "text"
    raise TypeError(f"unsupported value type {type(value).__name__}")


class Thing(BaseModel):
    """One sensor/actuator reading: who measured what, the value, and when.

    Immutable after construction.  ``machine`` and ``name`` embed into
    broker subjects, so they must be single subject tokens.  Timestamps
    are truncated to millisecond resolution (the wire resolution) at
    construction, which makes equality and round-trips exact.
    """

    model_config = ConfigDict(frozen=True)

    machine: str
    name: str
    value: Union[StrictBool, StrictInt, StrictFloat, StrictStr]
    timestamp: datetime
    unit: str | None = None

    @field_validator("machine", "name")
    @classmethod
    def _check_token(cls, v: str) -> str:
        if not TOKEN_RE.match(v):
            raise ValueError(
                f"{v!r} is not a valid subject token (need non-empty [A-Za-z0-9_-]+)"
            )
        return v

    @field_validator("value")
    @classmethod
    def _check_value(cls, v: Value) -> Value:
        if isinstance(v, bool):
            return v
        if isinstance(v, int):
            if not _INT64_MIN <= v <= _INT64_MAX:
                raise ValueError("integer value outside the signed 64-bit range")
        elif isinstance(v, float):
            if math.isnan(v):
                raise ValueError("NaN values are rejected: they break round-trip equality")
        elif isinstance(v, str):
            if len(v.encode("utf-8")) > _MAX_TEXT_BYTES:
                raise ValueError("text value exceeds 64 KiB")
        return v

    @field_validator("timestamp")
    @classmethod
    def _normalize_timestamp(cls, v: datetime) -> datetime:
        if v.tzinfo is None:
            v = v.replace(tzinfo=timezone.utc)
        else:
            v = v.astimezone(timezone.utc)
        v = v.replace(microsecond=v.microsecond - v.microsecond % 1000)
        if v - datetime.now(timezone.utc) > _MAX_FUTURE:
            raise ValueError("timestamp is more than 24 h in the future")
        return v

    @classmethod
    def now(cls, machine: str, name: str, value: Value, unit: str | None = None) -> "Thing":
        """Build a reading stamped with the current UTC wall clock."""
        return cls(
            machine=machine,
            name=name,
            value=value,
            timestamp=datetime.now(timezone.utc),
            unit=unit,
        )


@dataclass(frozen=True)
class Subject:
    """Hierarchical routing key: dot-joined tokens, e.g. ``v1.thing.filler1.temp``.

    ``*`` matches exactly one token, ``>`` the whole remaining tail;
    wildcards are legal only in subscriptions, never when publishing.
    """

    segments: tuple[str, ...]

    def __post_init__(self):
        if not self.segments:
            raise InvalidSegment("subject needs at least one segment")
        for i, seg in enumerate(self.segments):
            if seg in ("*", ">"):
                if seg == ">" and i != len(self.segments) - 1:
                    raise InvalidSegment("'>' is only allowed as the final segment")
                continue
            if not TOKEN_RE.match(seg):
                raise InvalidSegment(
                    f"segment {seg!r} is not [A-Za-z0-9_-]+ or a wildcard"
                )
        if len(str(self).encode("utf-8")) > _MAX_SUBJECT_BYTES:
            raise InvalidSegment("rendered subject exceeds 255 bytes")

    @classmethod
    def parse(cls, rendered: str) -> "Subject":
        return cls(tuple(rendered.split(".")))

    @property
    def has_wildcards(self) -> bool:
        return any(seg in ("*", ">") for seg in self.segments)

    def __str__(self) -> str:
        return ".".join(self.segments)


def subject_for_thing(machine: str, name: str) -> Subject:
    """The canonical subject a Thing from ``machine``/``name`` is published on.

    Versioned so the schema can evolve (``v2.thing...``) and hierarchical so
    consumers can subscribe per machine (``v1.thing.filler1.>``).
    """
    for label, token in (("machine", machine), ("name", name)):
        if not isinstance(token, str) or not TOKEN_RE.match(token or ""):
            raise InvalidSegment(
                f"{label} {token!r} is not a valid subject token (need non-empty [A-Za-z0-9_-]+)"
            )
    return Subject(("v1", "thing", machine, name))


@dataclass(frozen=True)
class Envelope:
    """A payload bound to a concrete subject, tagged with its serialization format.

    Messages arriving from the broker are tagged ``binary`` — the wire
    carries no format information and binary is the inter-service
    convention.  Decoding is always explicit via :func:`decode`.
    """

    subject: Subject
    payload: bytes
    format: Format = Format.BINARY

    def __post_init__(self):
        if self.subject.has_wildcards:
            raise InvalidSegment("envelope subjects must be wildcard-free")


def _timestamp_ms(dt: datetime) -> int:
    return (dt - _EPOCH) // _MS


def _datetime_from_ms(ms: int) -> datetime:
    try:
        return _EPOCH + timedelta(milliseconds=ms)
    except OverflowError as exc:
        raise SchemaViolation(f"timestamp {ms} ms is outside the representable range") from exc


def encode(thing: Thing, format: Format = Format.BINARY) -> bytes:
    """Serialize a Thing. Deterministic: fixed field order, no optionals."""
    if format is Format.BINARY:
        return mpack.packb(
            {
                "machine": thing.machine,
                "name": thing.name,
                "value": {"type": value_kind(thing.value), "value": thing.value},
                "timestamp": _timestamp_ms(thing.timestamp),
                "unit": thing.unit,
            }
        )
    if format is Format.JSON:
        return json.dumps(
            {
                "machine": thing.machine,
                "name": thing.name,
                "value": thing.value,
                "timestamp": _timestamp_ms(thing.timestamp),
                "unit": thing.unit,
            },
            ensure_ascii=False,
        ).encode("utf-8")
    raise TypeError(f"unknown format {format!r}")


def decode(payload: bytes, format: Format = Format.BINARY) -> Thing:
    """Inverse of :func:`encode`. Unknown extra keys are ignored.

    Raises :class:`MalformedPayload` when the bytes do not parse under the
    format at all, :class:`SchemaViolation` when they parse but required
    fields are missing or ill-typed.  There is no fallback between formats.
    """
    if format is Format.BINARY:
        try:
            obj = mpack.unpackb(payload)
        except (ValueError, TypeError) as exc:
            raise MalformedPayload(f"not valid MessagePack: {exc}") from exc
        value = _binary_value(_require_map(obj))
    elif format is Format.JSON:
        try:
            obj = json.loads(payload.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise MalformedPayload(f"not valid JSON: {exc}") from exc
        fields = _require_map(obj)
        value = fields["value"]
        if not isinstance(value, (bool, int, float, str)):
            raise SchemaViolation("field 'value' must be int, float, bool or str")
    else:
        raise TypeError(f"unknown format {format!r}")

    fields = _require_map(obj)
    ts = fields["timestamp"]
    if isinstance(ts, bool) or not isinstance(ts, int):
        raise SchemaViolation("field 'timestamp' must be integer epoch milliseconds")
    unit = fields.get("unit")
    if unit is not None and not isinstance(unit, str):
        raise SchemaViolation("field 'unit' must be a string or null")
    try:
        return Thing(
            machine=fields["machine"],
            name=fields["name"],
            value=value,
            timestamp=_datetime_from_ms(ts),
            unit=unit,
        )
    except ValidationError as exc:
        raise SchemaViolation(str(exc)) from exc


_REQUIRED_KEYS = ("machine", "name", "value", "timestamp")


def _require_map(obj) -> dict:
    if not isinstance(obj, dict):
        raise SchemaViolation(f"payload root must be a map, got {type(obj).__name__}")
    missing = [k for k in _REQUIRED_KEYS if k not in obj]
    if missing:
        raise SchemaViolation(f"missing required field(s): {', '.join(missing)}")
    return obj


_VALUE_TAGS = ("integer", "float", "boolean", "text")


def _binary_value(fields: dict) -> Value:
    tagged = fields["value"]
    if not isinstance(tagged, dict) or "type" not in tagged or "value" not in tagged:
        raise SchemaViolation("binary 'value' must be a map with 'type' and 'value'")
    tag, raw = tagged["type"], tagged["value"]
    if tag == "integer":
        if isinstance(raw, bool) or not isinstance(raw, int):
            raise SchemaViolation("tag 'integer' requires an integer value")
        return raw
    if tag == "float":
        # an integral float packed as int by a foreign encoder keeps its tag
        if isinstance(raw, bool) or not isinstance(raw, (int, float)):
            raise SchemaViolation("tag 'float' requires a numeric value")
        return float(raw)
    if tag == "boolean":
        if not isinstance(raw, bool):
            raise SchemaViolation("tag 'boolean' requires a boolean value")
        return raw
    if tag == "text":
        if not isinstance(raw, str):
            raise SchemaViolation("tag 'text' requires a string value")
        return raw
    raise SchemaViolation(f"unknown value tag {tag!r}; expected one of {_VALUE_TAGS}")
