"""Device-local state for the CLI: persistent store, ledger, cursors, blobs."""

from __future__ import annotations

from pathlib import Path

from .client import HttpPeer, relay_blobs
from .model import FreshnessState, Record, RecordId, Schema, next_record_id, validate_record
from .storage import (
    BlobStore,
    PersistentStore,
    load_cursors,
    load_ledger,
    save_cursors,
    save_ledger,
)
from .sync import SyncReport, Tier, insert_local, sync_session


class DeviceNode:
    """One analyst device: everything under ``data_dir`` survives restarts."""

    def __init__(self, device_id: str, data_dir: Path):
        self.device_id = device_id
        self.data_dir = Path(data_dir)
        self.persistent = PersistentStore(Tier.DEVICE, device_id, self.data_dir)
        self.store = self.persistent.store
        self._ledger_path = self.data_dir / "ledger.json"
        self._cursor_path = self.data_dir / "cursors.json"
        self.ledger = load_ledger(self._ledger_path)
        self.persistent.ledger = self.ledger
        # a lost sidecar only ever demotes to the safe floor, never upward
        for record_id in self.store.ids():
            self.ledger.observe(record_id, FreshnessState.UNSYNCED)
        self.cursors = load_cursors(self._cursor_path)
        self.blobs = BlobStore(self.data_dir / "blobs")

    def _save(self) -> None:
        save_ledger(self._ledger_path, self.ledger)
        save_cursors(self._cursor_path, self.cursors)

    def next_id(self) -> RecordId:
        own = [rid.counter for rid in self.store.ids() if rid.device_id == self.device_id]
        return next_record_id(self.device_id, max(own) if own else -1)

    def collect(self, schema: Schema, draft: dict) -> Record:
        """Validate and durably insert a new local record (UNSYNCED)."""
        draft = dict(draft)
        draft.setdefault("id", self.next_id())
        record = validate_record(schema, draft)
        insert_local(self.store, record, self.ledger)
        self._save()
        return record

    def sync(self, peer_url: str) -> SyncReport:
        """One session against a peer service, plus opportunistic blob exchange."""
        peer = HttpPeer(peer_url)
        report = sync_session(self.store, self.ledger, peer, self.cursors)
        relay_blobs(self.store, self.blobs, peer)
        self._save()
        return report

    def close(self) -> None:
        self.persistent.close()
