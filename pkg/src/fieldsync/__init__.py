"""Offline-first field data collection: replication, analytics, indicators."""

from .model import (
    FieldSpec,
    FreshnessState,
    Record,
    RecordId,
    Schema,
    next_record_id,
    parse_schema,
    serialize_schema,
    validate_record,
)
from .sync import (
    FreshnessLedger,
    Replica,
    SyncCursor,
    SyncReport,
    Tier,
    TierStore,
    classify_freshness,
    delta_since,
    insert_local,
    merge,
    sync_session,
)

__all__ = [
    "FieldSpec",
    "FreshnessState",
    "Record",
    "RecordId",
    "Schema",
    "next_record_id",
    "parse_schema",
    "serialize_schema",
    "validate_record",
    "FreshnessLedger",
    "Replica",
    "SyncCursor",
    "SyncReport",
    "Tier",
    "TierStore",
    "classify_freshness",
    "delta_since",
    "insert_local",
    "merge",
    "sync_session",
]

__version__ = "0.1.0"
