"""Exception types shared across the fieldsync modules."""

from __future__ import annotations


class FieldSyncError(Exception):
    """Base class for all fieldsync errors."""


# -- schema / record validation --------------------------------------------

class MalformedDocument(FieldSyncError):
    """Input bytes are not a parseable document."""


class InvalidSchema(FieldSyncError):
    def __init__(self, message: str, field: str | None = None):
        super().__init__(message)
        self.field = field


class MissingField(FieldSyncError):
    def __init__(self, name: str):
        super().__init__(f"missing required field {name!r}")
        self.name = name


class TypeMismatch(FieldSyncError):
    def __init__(self, name: str, expected: str):
        super().__init__(f"field {name!r} expects {expected}")
        self.name = name
        self.expected = expected


class OutOfRange(FieldSyncError):
    def __init__(self, name: str, value: float, valid: tuple[float, float]):
        super().__init__(f"field {name!r} value {value} outside range {list(valid)}")
        self.name = name
        self.value = value
        self.range = valid


class BadCoordinate(FieldSyncError):
    def __init__(self, which: str, value: float):
        super().__init__(f"bad coordinate {which}={value}")
        self.which = which
        self.value = value


class InvalidDeviceId(FieldSyncError):
    pass


class InvalidRecord(FieldSyncError):
    """Structurally broken record draft (bad id, source, or timestamp)."""


class UnknownField(FieldSyncError):
    def __init__(self, name: str):
        super().__init__(f"unknown field {name!r}")
        self.name = name


# -- replication ------------------------------------------------------------

class PayloadConflict(FieldSyncError):
    """Same record id seen with a different payload; signals a device-id collision."""

    def __init__(self, record_id):
        super().__init__(f"payload conflict for record {record_id}")
        self.record_id = record_id


class PeerUnreachable(FieldSyncError):
    def __init__(self, peer: str, cause: str = ""):
        super().__init__(f"peer {peer} unreachable" + (f": {cause}" if cause else ""))
        self.peer = peer


class UnknownRecord(FieldSyncError):
    def __init__(self, record_id):
        super().__init__(f"unknown record {record_id}")
        self.record_id = record_id


# -- analytics / geometry ----------------------------------------------------

class NonNumericField(FieldSyncError):
    def __init__(self, name: str):
        super().__init__(f"field {name!r} holds non-numeric values")
        self.name = name


class Degenerate(FieldSyncError):
    """Target too far from the viewport for a legible wedge."""


class MissingValue(FieldSyncError):
    def __init__(self, name: str):
        super().__init__(f"record carries no value for field {name!r}")
        self.name = name


# -- simulation / configuration ----------------------------------------------

class MalformedScenario(FieldSyncError):
    def __init__(self, message: str, location: str = ""):
        super().__init__(f"{location}: {message}" if location else message)
        self.location = location


class InvalidInterval(FieldSyncError):
    pass


class ConfigError(FieldSyncError):
    pass
