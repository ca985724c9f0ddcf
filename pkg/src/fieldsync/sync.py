"""Three-tier replication: append-only set union with cursor deltas.

Stores are grow-only sets of records ordered by a store-local insertion
sequence. A sync session pushes the local delta to a peer, pulls the peer's
delta back, and promotes the local freshness ledger for every record the
peer acknowledged. One protocol serves all three roles: a device syncing
with the edge relay, the edge relaying to the cloud, and a device talking
to the cloud directly.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field
from typing import Iterable, Protocol, Sequence

from .errors import PayloadConflict, UnknownRecord
from .model import FRESHNESS_COLORS, FreshnessState, Record, RecordId, same_payload


class Tier(enum.Enum):
    DEVICE = "device"
    EDGE = "edge"
    CLOUD = "cloud"


#: Freshness implied by a record being present at (or acknowledged by) a tier.
TIER_FRESHNESS = {
    Tier.DEVICE: FreshnessState.UNSYNCED,
    Tier.EDGE: FreshnessState.EDGE_CACHED,
    Tier.CLOUD: FreshnessState.REMOTE,
}


@dataclass(frozen=True)
class SyncCursor:
    """High-water mark of a peer's sequence numbers we have already seen."""

    peer_store_id: str
    last_seq_seen: int = 0

    def __post_init__(self):
        if self.last_seq_seen < 0:
            raise ValueError("cursor may not be negative")


class TierStore:
    """Append-only record set with a monotone, dense insertion sequence.

    A record id maps to exactly one payload forever; re-inserting the same
    payload is a no-op and a differing payload raises PayloadConflict.
    """

    def __init__(self, tier: Tier, store_id: str):
        self.tier = tier
        self.store_id = store_id
        self.records: dict[RecordId, Record] = {}
        self.seq_of: dict[RecordId, int] = {}
        self._order: list[Record] = []
        # invoked with each newly inserted record; persistence hooks in here
        self.on_insert = None

    def __len__(self) -> int:
        return len(self._order)

    def __contains__(self, record_id: RecordId) -> bool:
        return record_id in self.records

    @property
    def next_seq(self) -> int:
        return len(self._order) + 1

    @property
    def max_seq(self) -> int:
        return len(self._order)

    def get(self, record_id: RecordId) -> Record | None:
        return self.records.get(record_id)

    def ids(self) -> set[RecordId]:
        return set(self.records)

    def in_seq_order(self) -> list[Record]:
        return list(self._order)

    def insert(self, record: Record) -> int | None:
        """Add a record; returns its new seq, or None when already present."""
        existing = self.records.get(record.id)
        if existing is not None:
            if not same_payload(existing, record):
                raise PayloadConflict(record.id)
            return None
        if self.on_insert is not None:
            self.on_insert(record)  # durability first: log before indexing
        self._order.append(record)
        seq = len(self._order)
        self.records[record.id] = record
        self.seq_of[record.id] = seq
        return seq


class FreshnessLedger:
    """Per-device map of record id to freshness state; entries only move up."""

    def __init__(self):
        self.entries: dict[RecordId, FreshnessState] = {}

    def __contains__(self, record_id: RecordId) -> bool:
        return record_id in self.entries

    def state_of(self, record_id: RecordId) -> FreshnessState:
        try:
            return self.entries[record_id]
        except KeyError:
            raise UnknownRecord(record_id) from None

    def observe(self, record_id: RecordId, floor: FreshnessState) -> None:
        """Ensure an entry exists at least at ``floor``; never lowers."""
        current = self.entries.get(record_id)
        if current is None or floor > current:
            self.entries[record_id] = floor

    def promote(self, record_id: RecordId, state: FreshnessState) -> bool:
        """Raise an entry to ``state``; returns True when the state increased."""
        current = self.entries.get(record_id)
        if current is None or state > current:
            self.entries[record_id] = state
            return True
        return False


def classify_freshness(ledger: FreshnessLedger, record_id: RecordId) -> str:
    """Color class for one record: red, green, or blue."""
    return FRESHNESS_COLORS[ledger.state_of(record_id)]


@dataclass
class SyncReport:
    peer: str
    pushed: int = 0
    pulled: int = 0
    promoted: list[tuple[RecordId, FreshnessState]] = field(default_factory=list)
    duration_ticks: int = 0
    pushed_ids: list[RecordId] = field(default_factory=list)
    pulled_ids: list[RecordId] = field(default_factory=list)

    @property
    def quiescent(self) -> bool:
        return self.pushed == 0 and self.pulled == 0


# -- core operations ---------------------------------------------------------

def insert_local(store: TierStore, record: Record, ledger: FreshnessLedger) -> bool:
    """Insert a record into a store and floor its ledger entry.

    New records on a device start UNSYNCED; on the edge or cloud a record's
    mere presence already implies the corresponding freshness. Idempotent.
    """
    seq = store.insert(record)
    ledger.observe(record.id, TIER_FRESHNESS[store.tier])
    return seq is not None


def delta_since(store: TierStore, cursor: SyncCursor) -> tuple[list[Record], SyncCursor]:
    """Records with seq beyond the cursor, in seq order, plus the new cursor.

    A cursor beyond the store's range yields an empty batch and is returned
    unchanged, so repeating a delta is always safe.
    """
    after = cursor.last_seq_seen
    batch = store.in_seq_order()[after:]
    if not batch:
        return [], cursor
    return batch, SyncCursor(cursor.peer_store_id, store.max_seq)


def merge(store: TierStore, batch: Iterable[Record]) -> list[RecordId]:
    """Set-union a batch into a store; returns ids that were actually new."""
    added = []
    for record in batch:
        if store.insert(record) is not None:
            added.append(record.id)
    return added


class PeerEndpoint(Protocol):
    """The peer-facing half of a sync session (in-process or HTTP)."""

    @property
    def tier(self) -> Tier: ...

    @property
    def store_id(self) -> str: ...

    def push_records(self, batch: Sequence[Record]) -> tuple[list[RecordId], list[RecordId]]:
        """Deliver a batch; returns (accepted_ids, known_ids)."""
        ...

    def fetch_delta(self, after: int) -> tuple[list[Record], int]:
        """Records with peer seq > after plus the peer's new max seq."""
        ...


class LocalPeer:
    """Wraps a (store, ledger) pair as an in-process peer endpoint."""

    def __init__(self, store: TierStore, ledger: FreshnessLedger):
        self._store = store
        self._ledger = ledger

    @property
    def tier(self) -> Tier:
        return self._store.tier

    @property
    def store_id(self) -> str:
        return self._store.store_id

    def push_records(self, batch: Sequence[Record]) -> tuple[list[RecordId], list[RecordId]]:
        accepted, known = [], []
        for record in batch:
            if insert_local(self._store, record, self._ledger):
                accepted.append(record.id)
            else:
                known.append(record.id)
        return accepted, known

    def fetch_delta(self, after: int) -> tuple[list[Record], int]:
        batch, cursor = delta_since(self._store, SyncCursor(self._store.store_id, after))
        return batch, cursor.last_seq_seen


class CursorMap:
    """Push/pull cursors a node keeps per peer store."""

    def __init__(self):
        self.push: dict[str, int] = {}
        self.pull: dict[str, int] = {}

    def to_doc(self) -> dict:
        return {"push": dict(self.push), "pull": dict(self.pull)}

    @classmethod
    def from_doc(cls, doc: dict) -> "CursorMap":
        cursors = cls()
        cursors.push.update({k: int(v) for k, v in doc.get("push", {}).items()})
        cursors.pull.update({k: int(v) for k, v in doc.get("pull", {}).items()})
        return cursors


def sync_session(
    local: TierStore,
    ledger: FreshnessLedger,
    peer: PeerEndpoint,
    cursors: CursorMap,
) -> SyncReport:
    """One bidirectional session: push our delta, pull theirs, promote.

    Every record the peer acknowledges (accepted or already known, pushed or
    pulled) is promoted to the freshness its tier implies; promotion never
    lowers a state. Cursors advance only after the corresponding leg
    succeeded, so an interrupted session re-sends at most one delta, which
    the set-union semantics absorb.

    Raises PeerUnreachable (no state change) or PayloadConflict (session
    aborts after naming the id).
    """
    report = SyncReport(peer=peer.store_id)
    acked_state = TIER_FRESHNESS[peer.tier]

    # push leg: counts reflect set-level novelty (records the peer accepted
    # as new); records the peer already knew still count as acknowledgments
    out_batch, new_push = delta_since(local, SyncCursor(peer.store_id, cursors.push.get(peer.store_id, 0)))
    if out_batch:
        accepted, known = peer.push_records(out_batch)
        report.pushed = len(accepted)
        report.pushed_ids = list(accepted)
        for record_id in [*accepted, *known]:
            if ledger.promote(record_id, acked_state):
                report.promoted.append((record_id, acked_state))
    cursors.push[peer.store_id] = new_push.last_seq_seen

    # pull leg: the delta may echo records we just pushed; they merge as
    # no-ops and only genuinely new records count as pulled
    in_batch, new_seq = peer.fetch_delta(cursors.pull.get(peer.store_id, 0))
    if in_batch:
        added = set(merge(local, in_batch))
        report.pulled = len(added)
        report.pulled_ids = [r.id for r in in_batch if r.id in added]
        for record in in_batch:
            ledger.observe(record.id, TIER_FRESHNESS[local.tier])
            if ledger.promote(record.id, acked_state):
                report.promoted.append((record.id, acked_state))
    cursors.pull[peer.store_id] = new_seq

    return report


@dataclass
class Replica:
    """A complete sync node: store plus device-local ledger and cursors."""

    store: TierStore
    ledger: FreshnessLedger = field(default_factory=FreshnessLedger)
    cursors: CursorMap = field(default_factory=CursorMap)

    @classmethod
    def create(cls, tier: Tier, store_id: str) -> "Replica":
        return cls(store=TierStore(tier, store_id))

    def insert(self, record: Record) -> bool:
        return insert_local(self.store, record, self.ledger)

    def sync_with(self, peer: PeerEndpoint) -> SyncReport:
        return sync_session(self.store, self.ledger, peer, self.cursors)

    def as_peer(self) -> LocalPeer:
        return LocalPeer(self.store, self.ledger)
