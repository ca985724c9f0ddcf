"""Replication protocol: stores, deltas, merge algebra, sessions, freshness."""

from __future__ import annotations

import random
from dataclasses import replace

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fieldsync import errors
from fieldsync.model import FreshnessState
from fieldsync.sync import (
    FreshnessLedger,
    Replica,
    SyncCursor,
    Tier,
    TierStore,
    classify_freshness,
    delta_since,
    insert_local,
    merge,
)


def new_device(store_id="teamA-phone1") -> Replica:
    return Replica.create(Tier.DEVICE, store_id)


def new_edge() -> Replica:
    return Replica.create(Tier.EDGE, "edge")


def new_cloud() -> Replica:
    return Replica.create(Tier.CLOUD, "cloud")


class TestInsertLocal:
    def test_first_insert(self, make_record):
        device = new_device()
        r1 = make_record()
        insert_local(device.store, r1, device.ledger)
        assert len(device.store) == 1
        assert device.store.seq_of[r1.id] == 1
        assert device.ledger.state_of(r1.id) == FreshnessState.UNSYNCED

    def test_idempotent(self, make_record):
        device = new_device()
        r1 = make_record()
        insert_local(device.store, r1, device.ledger)
        before = (device.store.ids(), dict(device.store.seq_of))
        insert_local(device.store, r1, device.ledger)
        assert (device.store.ids(), dict(device.store.seq_of)) == before

    def test_same_id_different_payload_conflicts(self, make_record):
        device = new_device()
        r1 = make_record(scorch=42.0)
        insert_local(device.store, r1, device.ledger)
        clash = replace(r1, values={"scorch": 77.0})
        with pytest.raises(errors.PayloadConflict) as excinfo:
            insert_local(device.store, clash, device.ledger)
        assert excinfo.value.record_id == r1.id


class TestDeltaSince:
    def test_full_pull(self, make_record):
        store = new_device().store
        for _ in range(3):
            store.insert(make_record())
        batch, cursor = delta_since(store, SyncCursor("peer", 0))
        assert len(batch) == 3
        assert cursor.last_seq_seen == 3

    def test_no_news(self, make_record):
        store = new_device().store
        for _ in range(3):
            store.insert(make_record())
        _, cursor = delta_since(store, SyncCursor("peer", 0))
        batch, cursor2 = delta_since(store, cursor)
        assert batch == []
        assert cursor2 == cursor

    def test_partial_window(self, make_record):
        # seq 1..5 with cursor 2 must yield exactly the records at seq 3,4,5
        store = new_device().store
        records = [make_record() for _ in range(5)]
        for r in records:
            store.insert(r)
        batch, cursor = delta_since(store, SyncCursor("peer", 2))
        assert [r.id for r in batch] == [records[2].id, records[3].id, records[4].id]
        assert [store.seq_of[r.id] for r in batch] == [3, 4, 5]
        assert cursor.last_seq_seen == 5

    def test_cursor_beyond_range_is_empty(self, make_record):
        store = new_device().store
        store.insert(make_record())
        batch, cursor = delta_since(store, SyncCursor("peer", 99))
        assert batch == []
        assert cursor.last_seq_seen == 99


class TestMerge:
    def test_empty_batch_is_identity(self, make_record):
        store = new_device().store
        store.insert(make_record())
        before = store.ids()
        assert merge(store, []) == []
        assert store.ids() == before

    def test_self_merge_is_identity(self, make_record):
        store = new_device().store
        for _ in range(4):
            store.insert(make_record())
        assert merge(store, store.in_seq_order()) == []
        assert len(store) == 4

    def test_set_union(self, make_record):
        r1, r2, r3 = (make_record(device=d) for d in ("a", "b", "c"))
        a = new_device("A")
        for r in (r1, r2):
            a.store.insert(r)
        b = new_device("B")
        for r in (r2, r3):
            b.store.insert(r)
        added = merge(a.store, b.store.in_seq_order())
        assert a.store.ids() == {r1.id, r2.id, r3.id}
        assert added == [r3.id]


class TestSyncSession:
    def test_device_pushes_to_empty_edge(self, make_record):
        device, edge = new_device(), new_edge()
        r1 = make_record()
        device.insert(r1)
        report = device.sync_with(edge.as_peer())
        assert report.pushed == 1
        assert report.pulled == 0
        assert device.ledger.state_of(r1.id) == FreshnessState.EDGE_CACHED
        assert r1.id in edge.store
        assert edge.ledger.state_of(r1.id) == FreshnessState.EDGE_CACHED

    def test_known_id_still_promotes(self, make_record):
        # hand trace: device holds r1 at EDGE_CACHED, cloud already has r1;
        # the push finds it known -- zero new transfers, but the ack promotes
        device, cloud = new_device(), new_cloud()
        r1 = make_record()
        device.insert(r1)
        device.ledger.promote(r1.id, FreshnessState.EDGE_CACHED)
        cloud.insert(r1)
        report = device.sync_with(cloud.as_peer())
        assert report.pushed == 0
        assert device.ledger.state_of(r1.id) == FreshnessState.REMOTE
        assert (r1.id, FreshnessState.REMOTE) in report.promoted

    def test_second_session_quiescent(self, make_record):
        device, edge = new_device(), new_edge()
        device.insert(make_record())
        device.sync_with(edge.as_peer())
        report = device.sync_with(edge.as_peer())
        assert report.quiescent
        assert report.promoted == []

    def test_pull_inherits_peer_tier_state(self, make_record):
        device, cloud = new_device(), new_cloud()
        r1 = make_record(device="other")
        cloud.insert(r1)
        report = device.sync_with(cloud.as_peer())
        assert report.pulled == 1
        assert device.ledger.state_of(r1.id) == FreshnessState.REMOTE

    def test_promotion_never_lowers(self, make_record):
        device, edge = new_device(), new_edge()
        r1 = make_record()
        device.insert(r1)
        device.ledger.promote(r1.id, FreshnessState.REMOTE)
        device.sync_with(edge.as_peer())
        assert device.ledger.state_of(r1.id) == FreshnessState.REMOTE

    def test_conflict_aborts_session(self, make_record):
        device, edge = new_device(), new_edge()
        r1 = make_record(scorch=10.0)
        device.insert(r1)
        edge.insert(replace(r1, values={"scorch": 99.0}))
        with pytest.raises(errors.PayloadConflict):
            device.sync_with(edge.as_peer())

    def test_relay_chain_promotes_edge_ledger(self, make_record):
        device, edge, cloud = new_device(), new_edge(), new_cloud()
        r1 = make_record()
        device.insert(r1)
        device.sync_with(edge.as_peer())
        edge.sync_with(cloud.as_peer())
        assert edge.ledger.state_of(r1.id) == FreshnessState.REMOTE
        assert r1.id in cloud.store
        # the device has not spoken to the cloud; its view stays green
        assert device.ledger.state_of(r1.id) == FreshnessState.EDGE_CACHED


class TestClassifyFreshness:
    def test_color_mapping(self, make_record):
        device, edge, cloud = new_device(), new_edge(), new_cloud()
        r = make_record()
        device.insert(r)
        assert classify_freshness(device.ledger, r.id) == "red"
        device.sync_with(edge.as_peer())
        assert classify_freshness(device.ledger, r.id) == "green"
        device.sync_with(cloud.as_peer())
        assert classify_freshness(device.ledger, r.id) == "blue"

    def test_unknown_record(self, make_record):
        ledger = FreshnessLedger()
        with pytest.raises(errors.UnknownRecord):
            classify_freshness(ledger, make_record().id)


class TestConvergence:
    def test_full_mesh_converges(self, make_record):
        device_a, device_b = new_device("A"), new_device("B")
        edge, cloud = new_edge(), new_cloud()
        for _ in range(3):
            device_a.insert(make_record(device="A"))
        for _ in range(2):
            device_b.insert(make_record(device="B"))
        for _ in range(2):  # two rounds flush transitive deltas
            device_a.sync_with(edge.as_peer())
            device_b.sync_with(edge.as_peer())
            edge.sync_with(cloud.as_peer())
            device_a.sync_with(edge.as_peer())
            device_b.sync_with(edge.as_peer())
        ids = device_a.store.ids()
        assert ids == device_b.store.ids() == edge.store.ids() == cloud.store.ids()
        assert len(ids) == 5


@st.composite
def record_batches(draw, make):
    n_records = draw(st.integers(min_value=0, max_value=12))
    records = [make(device=f"dev{i % 3}") for i in range(n_records)]
    n_stores = draw(st.integers(min_value=1, max_value=6))
    assignment = [draw(st.sets(st.integers(min_value=0, max_value=n_records - 1)))
                  if n_records else set() for _ in range(n_stores)]
    return records, assignment


class TestMergeAlgebra:
    """Grow-only set semantics: merge commutes, associates, and is idempotent."""

    def _union_ids(self, stores):
        target = Replica.create(Tier.CLOUD, "target")
        for s in stores:
            merge(target.store, s.in_seq_order())
        return target.store.ids()

    def test_randomized_permutations(self, make_record):
        rng = random.Random(42)
        for _ in range(50):
            records = [make_record(device=f"d{i % 4}") for i in range(rng.randint(0, 10))]
            stores = []
            for _ in range(rng.randint(1, 6)):
                store = TierStore(Tier.DEVICE, "s")
                for record in records:
                    if rng.random() < 0.5:
                        store.insert(record)
                stores.append(store)
            reference = self._union_ids(stores)
            for _ in range(4):
                shuffled = stores[:]
                rng.shuffle(shuffled)
                assert self._union_ids(shuffled) == reference
            # idempotence: merging any store twice changes nothing
            assert self._union_ids(stores + stores) == reference


@given(after=st.integers(min_value=0, max_value=30), n=st.integers(min_value=0, max_value=20))
@settings(max_examples=50)
def test_cursor_safety_property(after, n):
    """Repeating delta_since with the returned cursor yields an empty batch."""
    from tests_support import simple_record

    store = TierStore(Tier.CLOUD, "c")
    for i in range(n):
        store.insert(simple_record("dev", i))
    batch, cursor = delta_since(store, SyncCursor("p", after))
    again, cursor2 = delta_since(store, cursor)
    assert again == []
    assert cursor2 == cursor
    if after <= n:
        assert len(batch) == n - after
