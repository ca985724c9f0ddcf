"""Schemas, records, identifiers, and validation.

The shared vocabulary of every other module: a Schema drives form
generation and validation, a Record is an immutable geotagged observation,
and FreshnessState tracks how far a record has replicated as seen from one
device.
"""

from __future__ import annotations

import enum
import json
import math
import re
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Any, Mapping

from .errors import (
    BadCoordinate,
    InvalidDeviceId,
    InvalidRecord,
    InvalidSchema,
    MalformedDocument,
    MissingField,
    OutOfRange,
    TypeMismatch,
    UnknownField,
)

FIELD_KINDS = ("numeric", "text", "time", "gps", "image")
RECORD_SOURCES = ("manual", "sensor", "archival")

_HEX_DIGEST = re.compile(r"^[0-9a-f]{64}$")


class FreshnessState(enum.IntEnum):
    """Replication acknowledgment level of a record on one device.

    Totally ordered; a record's state only ever moves upward.
    """

    UNSYNCED = 0
    EDGE_CACHED = 1
    REMOTE = 2


#: Display color per freshness state: local-only red, edge-acked green,
#: cloud-acked blue.
FRESHNESS_COLORS = {
    FreshnessState.UNSYNCED: "red",
    FreshnessState.EDGE_CACHED: "green",
    FreshnessState.REMOTE: "blue",
}


@dataclass(frozen=True)
class FieldSpec:
    """One typed entry in a collection schema."""

    name: str
    kind: str
    unit: str | None = None
    required: bool = False
    numeric_range: tuple[float, float] | None = None

    def __post_init__(self):
        if not self.name:
            raise InvalidSchema("field name must be nonempty", field=self.name)
        if self.kind not in FIELD_KINDS:
            raise InvalidSchema(
                f"field {self.name!r} has unknown kind {self.kind!r}", field=self.name
            )
        if self.numeric_range is not None:
            if self.kind != "numeric":
                raise InvalidSchema(
                    f"field {self.name!r}: numeric_range only valid for numeric kind",
                    field=self.name,
                )
            lo, hi = self.numeric_range
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
                raise InvalidSchema(
                    f"field {self.name!r} has bad range [{lo}, {hi}]", field=self.name
                )


@dataclass(frozen=True)
class Schema:
    """Named, versioned, ordered list of field specifications."""

    schema_id: str
    version: int
    fields: tuple[FieldSpec, ...]

    def __post_init__(self):
        if self.version < 1:
            raise InvalidSchema(f"version must be >= 1, got {self.version}")
        if not self.fields:
            raise InvalidSchema("schema must declare at least one field")
        seen: set[str] = set()
        for spec in self.fields:
            if spec.name in seen:
                raise InvalidSchema(
                    f"duplicate field name {spec.name!r}", field=spec.name
                )
            seen.add(spec.name)

    def field_named(self, name: str) -> FieldSpec:
        for spec in self.fields:
            if spec.name == name:
                return spec
        raise UnknownField(name)

    @property
    def field_names(self) -> tuple[str, ...]:
        return tuple(spec.name for spec in self.fields)


@dataclass(frozen=True, order=True)
class RecordId:
    """Device-scoped counter identity; canonical text form "device_id/counter"."""

    device_id: str
    counter: int

    def __post_init__(self):
        _check_device_id(self.device_id)
        if self.counter < 0:
            raise InvalidRecord(f"negative record counter {self.counter}")

    def __str__(self) -> str:
        return f"{self.device_id}/{self.counter}"

    @property
    def canonical(self) -> str:
        return str(self)

    @classmethod
    def parse(cls, text: str) -> "RecordId":
        device_id, sep, counter = text.rpartition("/")
        if not sep or not counter.isdigit():
            raise InvalidRecord(f"bad record id {text!r}")
        return cls(device_id, int(counter))


@dataclass(frozen=True)
class Record:
    """Immutable geotagged observation.

    ``values`` maps schema field names to validated values; treat it as
    read-only after construction.
    """

    id: RecordId
    schema_id: str
    schema_version: int
    timestamp: datetime
    lat: float
    lon: float
    author: str
    team: str
    source: str
    values: Mapping[str, Any]
    image_refs: tuple[str, ...] = field(default_factory=tuple)


def _check_device_id(device_id: str) -> None:
    if not device_id or "/" in device_id:
        raise InvalidDeviceId(f"bad device id {device_id!r}")


def next_record_id(device_id: str, last_counter: int) -> RecordId:
    """Next id for a device; pass last_counter=-1 before any record exists."""
    _check_device_id(device_id)
    if last_counter < -1:
        raise InvalidRecord(f"last_counter must be >= -1, got {last_counter}")
    return RecordId(device_id, last_counter + 1)


# -- timestamps ----------------------------------------------------------------

def parse_timestamp(value: Any) -> datetime:
    """Parse an RFC 3339 instant (or aware datetime) into aware UTC."""
    if isinstance(value, datetime):
        if value.tzinfo is None:
            raise InvalidRecord("naive datetime; timestamps must carry a timezone")
        return value.astimezone(timezone.utc)
    if isinstance(value, str):
        text = value.strip()
        if text.endswith(("Z", "z")):
            text = text[:-1] + "+00:00"
        try:
            parsed = datetime.fromisoformat(text)
        except ValueError as exc:
            raise InvalidRecord(f"bad timestamp {value!r}: {exc}") from None
        if parsed.tzinfo is None:
            raise InvalidRecord(f"timestamp {value!r} lacks a UTC offset")
        return parsed.astimezone(timezone.utc)
    raise InvalidRecord(f"bad timestamp {value!r}")


def format_timestamp(instant: datetime) -> str:
    """Canonical RFC 3339 UTC text, second precision unless finer is present."""
    utc = instant.astimezone(timezone.utc)
    base = utc.strftime("%Y-%m-%dT%H:%M:%S")
    if utc.microsecond:
        return f"{base}.{utc.microsecond:06d}Z"
    return base + "Z"


# -- schema wire format ----------------------------------------------------------

def parse_schema(document: bytes | str) -> Schema:
    """Parse the UTF-8 JSON schema wire format into a validated Schema."""
    try:
        if isinstance(document, bytes):
            document = document.decode("utf-8")
        doc = json.loads(document)
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise MalformedDocument(f"schema document not parseable: {exc}") from None
    if not isinstance(doc, dict):
        raise MalformedDocument("schema document must be a JSON object")
    try:
        schema_id = doc["schema_id"]
        version = doc["version"]
        raw_fields = doc["fields"]
    except KeyError as exc:
        raise MalformedDocument(f"schema document missing key {exc}") from None
    if not isinstance(schema_id, str) or not isinstance(version, int) or isinstance(version, bool):
        raise MalformedDocument("schema_id must be a string and version an integer")
    if not isinstance(raw_fields, list):
        raise MalformedDocument("fields must be a list")

    specs = []
    for i, raw in enumerate(raw_fields):
        if not isinstance(raw, dict) or "name" not in raw or "kind" not in raw:
            raise MalformedDocument(f"fields[{i}] must be an object with name and kind")
        rng = raw.get("numeric_range")
        if rng is not None:
            if (not isinstance(rng, (list, tuple)) or len(rng) != 2
                    or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in rng)):
                raise InvalidSchema(
                    f"field {raw['name']!r} numeric_range must be [min, max]",
                    field=raw["name"],
                )
            rng = (float(rng[0]), float(rng[1]))
        specs.append(
            FieldSpec(
                name=raw["name"],
                kind=raw["kind"],
                unit=raw.get("unit"),
                required=bool(raw.get("required", False)),
                numeric_range=rng,
            )
        )
    return Schema(schema_id=schema_id, version=version, fields=tuple(specs))


def serialize_schema(schema: Schema) -> bytes:
    """Inverse of parse_schema; emits the canonical schema wire document."""
    fields = []
    for spec in schema.fields:
        entry: dict[str, Any] = {"name": spec.name, "kind": spec.kind}
        if spec.unit is not None:
            entry["unit"] = spec.unit
        entry["required"] = spec.required
        if spec.numeric_range is not None:
            entry["numeric_range"] = list(spec.numeric_range)
        fields.append(entry)
    doc = {"schema_id": schema.schema_id, "version": schema.version, "fields": fields}
    return json.dumps(doc, separators=(",", ":"), sort_keys=True).encode("utf-8")


# -- record validation -----------------------------------------------------------

def _as_finite_number(name: str, value: Any) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise TypeMismatch(name, "numeric")
    # NaN and infinities poison downstream analytics; reject at the door.
    if not math.isfinite(value):
        raise TypeMismatch(name, "finite numeric")
    return float(value)


def _check_lat_lon(lat: Any, lon: Any) -> tuple[float, float]:
    if isinstance(lat, bool) or not isinstance(lat, (int, float)) or not math.isfinite(lat):
        raise BadCoordinate("lat", lat)
    if isinstance(lon, bool) or not isinstance(lon, (int, float)) or not math.isfinite(lon):
        raise BadCoordinate("lon", lon)
    if not -90.0 <= lat <= 90.0:
        raise BadCoordinate("lat", lat)
    if not -180.0 <= lon <= 180.0:
        raise BadCoordinate("lon", lon)
    return float(lat), float(lon)


def _validate_value(spec: FieldSpec, value: Any) -> Any:
    if spec.kind == "numeric":
        number = _as_finite_number(spec.name, value)
        if spec.numeric_range is not None:
            lo, hi = spec.numeric_range
            if not lo <= number <= hi:
                raise OutOfRange(spec.name, number, spec.numeric_range)
        return number
    if spec.kind == "text":
        if not isinstance(value, str):
            raise TypeMismatch(spec.name, "text")
        return value
    if spec.kind == "time":
        try:
            instant = parse_timestamp(value)
        except InvalidRecord:
            raise TypeMismatch(spec.name, "time (RFC 3339)") from None
        return format_timestamp(instant)
    if spec.kind == "gps":
        if (not isinstance(value, (list, tuple)) or len(value) != 2):
            raise TypeMismatch(spec.name, "gps [lat, lon]")
        lat, lon = value
        return list(_check_lat_lon(lat, lon))
    if spec.kind == "image":
        if not isinstance(value, str) or not _HEX_DIGEST.match(value):
            raise TypeMismatch(spec.name, "image (64-char hex content hash)")
        return value
    raise TypeMismatch(spec.name, spec.kind)  # unreachable for valid schemas


def validate_record(schema: Schema, draft: Mapping[str, Any]) -> Record:
    """Validate a draft against a schema and freeze it into a Record.

    The draft is a mapping with the record wire fields; ``values`` holds the
    candidate field values keyed by name. Raises MissingField, TypeMismatch,
    OutOfRange, BadCoordinate, or UnknownField on the first violation found.
    """
    try:
        raw_id = draft["id"]
        lat = draft["lat"]
        lon = draft["lon"]
        raw_values = draft["values"]
    except KeyError as exc:
        raise InvalidRecord(f"draft missing {exc}") from None

    record_id = raw_id if isinstance(raw_id, RecordId) else RecordId.parse(str(raw_id))
    lat, lon = _check_lat_lon(lat, lon)
    timestamp = parse_timestamp(draft.get("ts") or datetime.now(timezone.utc))

    schema_id = draft.get("schema_id", schema.schema_id)
    schema_version = draft.get("schema_version", schema.version)
    if schema_id != schema.schema_id or schema_version != schema.version:
        raise InvalidRecord(
            f"record targets schema {schema_id} v{schema_version}, "
            f"expected {schema.schema_id} v{schema.version}"
        )

    source = draft.get("source", "manual")
    if source not in RECORD_SOURCES:
        raise InvalidRecord(f"bad source {source!r}")

    if not isinstance(raw_values, Mapping):
        raise InvalidRecord("values must be a mapping")
    known = set(schema.field_names)
    for name in raw_values:
        if name not in known:
            raise UnknownField(name)

    values: dict[str, Any] = {}
    for spec in schema.fields:
        if spec.name not in raw_values:
            if spec.required:
                raise MissingField(spec.name)
            continue
        values[spec.name] = _validate_value(spec, raw_values[spec.name])

    image_refs = tuple(draft.get("image_refs") or ())
    for ref in image_refs:
        if not isinstance(ref, str) or not _HEX_DIGEST.match(ref):
            raise InvalidRecord(f"bad image ref {ref!r}")

    return Record(
        id=record_id,
        schema_id=schema.schema_id,
        schema_version=schema.version,
        timestamp=timestamp,
        lat=lat,
        lon=lon,
        author=str(draft.get("author", "")),
        team=str(draft.get("team", "")),
        source=source,
        values=values,
        image_refs=image_refs,
    )


# -- record wire format ------------------------------------------------------------

def record_to_doc(record: Record) -> dict[str, Any]:
    """Record wire document (JSON-safe dict)."""
    return {
        "id": str(record.id),
        "schema_id": record.schema_id,
        "schema_version": record.schema_version,
        "ts": format_timestamp(record.timestamp),
        "lat": record.lat,
        "lon": record.lon,
        "author": record.author,
        "team": record.team,
        "source": record.source,
        "values": dict(record.values),
        "image_refs": list(record.image_refs),
    }


def record_from_doc(doc: Mapping[str, Any], schema: Schema | None = None) -> Record:
    """Parse a record wire document; validates against ``schema`` when given."""
    if not isinstance(doc, Mapping):
        raise MalformedDocument("record document must be a JSON object")
    if schema is not None:
        return validate_record(schema, doc)
    try:
        record_id = RecordId.parse(str(doc["id"]))
        lat, lon = _check_lat_lon(doc["lat"], doc["lon"])
        timestamp = parse_timestamp(doc["ts"])
        values = doc["values"]
        source = doc["source"]
    except KeyError as exc:
        raise MalformedDocument(f"record document missing {exc}") from None
    if source not in RECORD_SOURCES:
        raise InvalidRecord(f"bad source {source!r}")
    if not isinstance(values, Mapping):
        raise InvalidRecord("values must be a mapping")
    return Record(
        id=record_id,
        schema_id=str(doc.get("schema_id", "")),
        schema_version=int(doc.get("schema_version", 1)),
        timestamp=timestamp,
        lat=lat,
        lon=lon,
        author=str(doc.get("author", "")),
        team=str(doc.get("team", "")),
        source=source,
        values=dict(values),
        image_refs=tuple(doc.get("image_refs") or ()),
    )


def canonical_json(obj: Any) -> bytes:
    """Deterministic JSON encoding used for conflict checks and store dumps."""
    return json.dumps(obj, separators=(",", ":"), sort_keys=True).encode("utf-8")


def same_payload(a: Record, b: Record) -> bool:
    return canonical_json(record_to_doc(a)) == canonical_json(record_to_doc(b))
