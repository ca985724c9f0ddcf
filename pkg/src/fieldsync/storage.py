"""Durable state for a tier: append-only record log, blob store, sidecars.

Log format: a flat file of frames, one per record, each frame being

    4-byte big-endian payload length | 4-byte CRC32 of payload | payload

where the payload is the canonical JSON record document. Replaying the file
from byte 0 reconstructs the in-memory store exactly; a partial or corrupt
trailing frame (a crash mid-write) is detected and truncated at startup, so
a recovered store is always a valid prefix of what was appended. The id and
seq indexes live only in memory and are rebuilt by replay.
"""

from __future__ import annotations

import hashlib
import json
import os
import struct
import zlib
from pathlib import Path

from .model import Record, canonical_json, record_from_doc, record_to_doc
from .sync import CursorMap, FreshnessLedger, Tier, TierStore, insert_local
from .model import FreshnessState, RecordId

_FRAME_HEADER = struct.Struct(">II")  # payload length, CRC32


def encode_frame(payload: bytes) -> bytes:
    return _FRAME_HEADER.pack(len(payload), zlib.crc32(payload)) + payload


class PersistentLog:
    """Append-only frame log with truncate-on-replay crash recovery."""

    def __init__(self, path: Path):
        self.path = Path(path)
        self.path.parent.mkdir(parents=True, exist_ok=True)
        self._fh = None

    def replay(self) -> list[bytes]:
        """All complete payloads in append order; truncates a torn tail."""
        if not self.path.exists():
            return []
        data = self.path.read_bytes()
        payloads = []
        offset = 0
        while True:
            header = data[offset:offset + _FRAME_HEADER.size]
            if len(header) < _FRAME_HEADER.size:
                break
            length, crc = _FRAME_HEADER.unpack(header)
            start = offset + _FRAME_HEADER.size
            payload = data[start:start + length]
            if len(payload) < length or zlib.crc32(payload) != crc:
                break
            payloads.append(payload)
            offset = start + length
        if offset < len(data):
            with open(self.path, "r+b") as fh:
                fh.truncate(offset)
        return payloads

    def append(self, payload: bytes) -> None:
        if self._fh is None:
            self._fh = open(self.path, "ab")
        self._fh.write(encode_frame(payload))
        self._fh.flush()
        os.fsync(self._fh.fileno())

    def close(self) -> None:
        if self._fh is not None:
            self._fh.close()
            self._fh = None


class PersistentStore:
    """A TierStore whose every insertion is logged before it is indexed.

    The hook covers all mutation paths (direct inserts, merges inside sync
    sessions), so a store recovered by replay is always a prefix of what the
    in-memory store held.
    """

    def __init__(self, tier: Tier, store_id: str, data_dir: Path):
        self.data_dir = Path(data_dir)
        self.log = PersistentLog(self.data_dir / "records.log")
        self.store = TierStore(tier, store_id)
        self.ledger = FreshnessLedger()
        for payload in self.log.replay():
            record = record_from_doc(json.loads(payload.decode("utf-8")))
            insert_local(self.store, record, self.ledger)
        # attach only after replay, or replay would re-append every frame
        self.store.on_insert = self._append

    def _append(self, record: Record) -> None:
        self.log.append(canonical_json(record_to_doc(record)))

    def insert(self, record: Record) -> bool:
        return insert_local(self.store, record, self.ledger)

    def close(self) -> None:
        self.log.close()


# -- blobs --------------------------------------------------------------------

def content_hash(data: bytes) -> str:
    """Project-wide content digest: SHA-256, lowercase hex."""
    return hashlib.sha256(data).hexdigest()


class BlobStore:
    """Content-addressed blob files under ``<dir>/<hash>``."""

    def __init__(self, root: Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)

    def has(self, digest: str) -> bool:
        return (self.root / digest).exists()

    def put(self, digest: str, data: bytes) -> bool:
        """Store bytes under their digest; returns False when already present.

        Raises ValueError when the digest does not match the bytes.
        """
        actual = content_hash(data)
        if actual != digest:
            raise ValueError(f"digest mismatch: got {digest}, bytes hash to {actual}")
        target = self.root / digest
        if target.exists():
            return False
        tmp = target.with_suffix(".tmp")
        tmp.write_bytes(data)
        tmp.replace(target)  # atomic on POSIX; readers never see partial blobs
        return True

    def get(self, digest: str) -> bytes | None:
        target = self.root / digest
        if not target.exists():
            return None
        return target.read_bytes()

    def hashes(self) -> list[str]:
        return sorted(p.name for p in self.root.iterdir() if not p.name.endswith(".tmp"))


# -- sidecar state (device ledger and cursors) ----------------------------------

def save_ledger(path: Path, ledger: FreshnessLedger) -> None:
    doc = {str(rid): state.name for rid, state in ledger.entries.items()}
    Path(path).write_text(json.dumps(doc, indent=0, sort_keys=True))


def load_ledger(path: Path) -> FreshnessLedger:
    ledger = FreshnessLedger()
    path = Path(path)
    if path.exists():
        for key, name in json.loads(path.read_text()).items():
            ledger.entries[RecordId.parse(key)] = FreshnessState[name]
    return ledger


def save_cursors(path: Path, cursors: CursorMap) -> None:
    Path(path).write_text(json.dumps(cursors.to_doc(), indent=0, sort_keys=True))


def load_cursors(path: Path) -> CursorMap:
    path = Path(path)
    if path.exists():
        return CursorMap.from_doc(json.loads(path.read_text()))
    return CursorMap()
