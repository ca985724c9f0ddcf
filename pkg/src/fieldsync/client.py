"""HTTP client side of the replication protocol."""

from __future__ import annotations

from typing import Sequence

import requests

from .errors import PayloadConflict, PeerUnreachable
from .model import Record, RecordId, record_from_doc, record_to_doc
from .sync import Tier

_TIMEOUT = 10.0


class HttpPeer:
    """A remote tier service exposed as a sync peer endpoint."""

    def __init__(self, base_url: str, timeout: float = _TIMEOUT):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._session = requests.Session()
        self._health: dict | None = None

    def _request(self, method: str, path: str, **kwargs) -> requests.Response:
        try:
            return self._session.request(
                method, self.base_url + path, timeout=self.timeout, **kwargs
            )
        except requests.RequestException as exc:
            raise PeerUnreachable(self.base_url, cause=type(exc).__name__) from None

    def _healthz(self) -> dict:
        if self._health is None:
            resp = self._request("GET", "/healthz")
            resp.raise_for_status()
            self._health = resp.json()
        return self._health

    @property
    def tier(self) -> Tier:
        return Tier(self._healthz()["tier"])

    @property
    def store_id(self) -> str:
        return self._healthz()["store_id"]

    def fetch_schema(self) -> bytes | None:
        resp = self._request("GET", "/schema")
        if resp.status_code == 404:
            return None
        resp.raise_for_status()
        return resp.content

    def push_records(self, batch: Sequence[Record]) -> tuple[list[RecordId], list[RecordId]]:
        body = {"records": [record_to_doc(r) for r in batch]}
        resp = self._request("POST", "/records", json=body)
        if resp.status_code == 409:
            raise PayloadConflict(RecordId.parse(resp.json()["id"]))
        resp.raise_for_status()
        doc = resp.json()
        return (
            [RecordId.parse(s) for s in doc["accepted_ids"]],
            [RecordId.parse(s) for s in doc["known_ids"]],
        )

    def fetch_delta(self, after: int) -> tuple[list[Record], int]:
        resp = self._request("GET", f"/records?after={after}")
        resp.raise_for_status()
        doc = resp.json()
        return [record_from_doc(d) for d in doc["records"]], int(doc["cursor"])

    def put_blob(self, digest: str, data: bytes) -> bool:
        resp = self._request("PUT", f"/blobs/{digest}", data=data)
        if resp.status_code == 400:
            raise ValueError(resp.json().get("error", "digest mismatch"))
        resp.raise_for_status()
        return bool(resp.json().get("new"))

    def get_blob(self, digest: str) -> bytes | None:
        resp = self._request("GET", f"/blobs/{digest}")
        if resp.status_code == 404:
            return None
        resp.raise_for_status()
        return resp.content

    def healthz(self) -> dict:
        resp = self._request("GET", "/healthz")
        resp.raise_for_status()
        return resp.json()


def relay_blobs(store, blobs, peer: HttpPeer, pushed_already: set[str] | None = None) -> tuple[int, int]:
    """Opportunistic blob exchange after a record sync.

    Pushes local blobs the peer may lack (PUT is idempotent), then fetches
    blobs referenced by records in the store but missing locally. Returns
    (pushed, fetched) counts; failures propagate as PeerUnreachable.
    """
    pushed = 0
    for digest in blobs.hashes():
        if pushed_already is not None and digest in pushed_already:
            continue
        data = blobs.get(digest)
        if data is not None:
            peer.put_blob(digest, data)
            pushed += 1
            if pushed_already is not None:
                pushed_already.add(digest)

    fetched = 0
    wanted: set[str] = set()
    for record in store.in_seq_order():
        wanted.update(record.image_refs)
    for digest in sorted(wanted):
        if not blobs.has(digest):
            data = peer.get_blob(digest)
            if data is not None:
                blobs.put(digest, data)
                fetched += 1
    return pushed, fetched
