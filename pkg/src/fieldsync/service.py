"""HTTP services for the edge relay and cloud datastore.

One service class covers both roles; an EDGE instance additionally runs a
background loop that syncs its store with the configured upstream cloud.
Endpoints (HTTP/1.1, UTF-8 JSON):

    GET  /schema                 the configured schema document, byte-exact
    GET  /records?after=<int>    {"records": [...], "cursor": <max seq>}
    POST /records                body {"records": [...]} ->
                                 {"accepted_ids": [...], "known_ids": [...]}
    PUT  /blobs/<hash>           content-addressed blob upload (idempotent)
    GET  /blobs/<hash>           blob bytes
    GET  /healthz                tier, record count, max seq, upstream status

Store mutations are serialized through a single lock (one writer at a time);
the log append happens inside that section so readers observe pre- or
post-state, never a partial batch.
"""

from __future__ import annotations

import json
import logging
import threading
import time
from dataclasses import dataclass
from datetime import datetime, timezone
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer
from pathlib import Path
from typing import Any
from urllib.parse import parse_qs, urlparse

from . import errors
from .errors import ConfigError, PayloadConflict, PeerUnreachable
from .model import Schema, canonical_json, parse_schema, record_from_doc, record_to_doc
from .storage import BlobStore, PersistentStore, load_cursors, save_cursors
from .sync import CursorMap, Tier, sync_session

log = logging.getLogger("fieldsync.service")


@dataclass
class ServiceConfig:
    tier: Tier
    host: str = "127.0.0.1"
    port: int = 0
    data_dir: Path = Path("fieldsync-data")
    upstream: str | None = None
    upstream_sync_interval: float = 5.0
    schema_path: Path | None = None
    store_id: str | None = None

    def __post_init__(self):
        if self.tier == Tier.EDGE and not self.upstream:
            raise ConfigError("edge tier requires an upstream cloud URL")
        if self.tier == Tier.CLOUD and self.upstream:
            raise ConfigError("cloud tier must not have an upstream")
        if self.tier == Tier.DEVICE:
            raise ConfigError("services run as edge or cloud, not device")

    @classmethod
    def from_doc(cls, doc: dict[str, Any], env: dict[str, str] | None = None) -> "ServiceConfig":
        import os

        env = env if env is not None else dict(os.environ)
        try:
            tier = Tier(doc["tier"])
        except (KeyError, ValueError):
            raise ConfigError(f"config needs tier 'edge' or 'cloud', got {doc.get('tier')!r}") from None
        host, port = doc.get("bind", "127.0.0.1:0").rsplit(":", 1)
        data_dir = env.get("FIELDSYNC_DATA_DIR") or doc.get("data_dir", "fieldsync-data")
        return cls(
            tier=tier,
            host=host,
            port=int(port),
            data_dir=Path(data_dir),
            upstream=doc.get("upstream"),
            upstream_sync_interval=float(doc.get("upstream_sync_interval", 5.0)),
            schema_path=Path(doc["schema"]) if doc.get("schema") else None,
            store_id=doc.get("store_id"),
        )

    @classmethod
    def from_file(cls, path: Path) -> "ServiceConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read service config {path}: {exc}") from None
        return cls.from_doc(doc)


class TierService:
    """An edge or cloud node: persistent store, blob store, HTTP surface."""

    def __init__(self, config: ServiceConfig, schema_doc: bytes | None = None):
        self.config = config
        store_id = config.store_id or config.tier.value
        self.persistent = PersistentStore(config.tier, store_id, config.data_dir)
        self.store = self.persistent.store
        self.ledger = self.persistent.ledger
        self.blobs = BlobStore(Path(config.data_dir) / "blobs")
        self._cursor_path = Path(config.data_dir) / "cursors.json"
        self.cursors: CursorMap = load_cursors(self._cursor_path)
        self._write_lock = threading.Lock()
        self._httpd: ThreadingHTTPServer | None = None
        self._upstream_thread: threading.Thread | None = None
        self._stop = threading.Event()
        self._relayed_blobs: set[str] = set()
        self.last_upstream_sync: str | None = None
        self.last_upstream_error: str | None = None

        if schema_doc is not None:
            self.schema_doc: bytes | None = schema_doc
        elif config.schema_path is not None:
            self.schema_doc = Path(config.schema_path).read_bytes()
        else:
            self.schema_doc = None
        self.schema: Schema | None = parse_schema(self.schema_doc) if self.schema_doc else None

    # -- request handling -------------------------------------------------

    def get_schema(self) -> bytes | None:
        return self.schema_doc

    def get_records(self, after: int) -> dict[str, Any]:
        if after < 0:
            raise ValueError("after must be >= 0")
        with self._write_lock:
            batch = self.store.in_seq_order()[after:]
            cursor = self.store.max_seq if batch else after
        return {"records": [record_to_doc(r) for r in batch], "cursor": cursor}

    def post_records(self, docs: list[dict[str, Any]]) -> dict[str, Any]:
        records = [record_from_doc(doc, schema=self.schema) for doc in docs]
        accepted, known = [], []
        with self._write_lock:
            for record in records:
                if self.persistent.insert(record):
                    accepted.append(str(record.id))
                else:
                    known.append(str(record.id))
        return {"accepted_ids": accepted, "known_ids": known}

    def healthz(self) -> dict[str, Any]:
        doc: dict[str, Any] = {
            "tier": self.config.tier.value,
            "store_id": self.store.store_id,
            "records": len(self.store),
            "max_seq": self.store.max_seq,
            "schema": self.schema is not None,
        }
        if self.config.tier == Tier.EDGE:
            doc["upstream"] = self.config.upstream
            doc["last_upstream_sync"] = self.last_upstream_sync
            doc["last_upstream_error"] = self.last_upstream_error
        return doc

    # -- upstream relay ----------------------------------------------------

    def sync_upstream(self) -> None:
        """One edge-to-cloud session; raises PeerUnreachable on failure."""
        from .client import HttpPeer, relay_blobs

        peer = HttpPeer(self.config.upstream)
        with self._write_lock:
            report = sync_session(self.store, self.ledger, peer, self.cursors)
            save_cursors(self._cursor_path, self.cursors)
        relay_blobs(self.store, self.blobs, peer, pushed_already=self._relayed_blobs)
        self.last_upstream_sync = datetime.now(timezone.utc).isoformat()
        self.last_upstream_error = None
        if not report.quiescent:
            log.info("upstream sync: pushed %d pulled %d", report.pushed, report.pulled)

    def _upstream_loop(self) -> None:
        while not self._stop.wait(self.config.upstream_sync_interval):
            try:
                self.sync_upstream()
            except (PeerUnreachable, PayloadConflict) as exc:
                self.last_upstream_error = str(exc)
                log.warning("upstream sync failed, will retry: %s", exc)

    # -- lifecycle ----------------------------------------------------------

    def start(self) -> tuple[str, int]:
        """Bind and serve in background threads; returns (host, port)."""
        handler = _make_handler(self)
        self._httpd = ThreadingHTTPServer((self.config.host, self.config.port), handler)
        thread = threading.Thread(
            target=self._httpd.serve_forever, kwargs={"poll_interval": 0.05}, daemon=True)
        thread.start()
        if self.config.tier == Tier.EDGE:
            self._upstream_thread = threading.Thread(target=self._upstream_loop, daemon=True)
            self._upstream_thread.start()
        host, port = self._httpd.server_address[:2]
        return str(host), int(port)

    def serve_forever(self) -> None:
        self.start()
        try:
            while True:
                time.sleep(3600)
        except KeyboardInterrupt:
            pass
        finally:
            self.stop()

    def stop(self) -> None:
        self._stop.set()
        if self._httpd is not None:
            self._httpd.shutdown()
            self._httpd.server_close()
            self._httpd = None
        self.persistent.close()

    @property
    def base_url(self) -> str:
        assert self._httpd is not None, "service not started"
        host, port = self._httpd.server_address[:2]
        return f"http://{host}:{port}"


def _make_handler(service: TierService):
    class Handler(BaseHTTPRequestHandler):
        protocol_version = "HTTP/1.1"
        disable_nagle_algorithm = True  # small JSON responses, avoid ACK stalls

        def log_message(self, fmt, *args):  # quiet by default
            log.debug("%s " + fmt, self.address_string(), *args)

        def _reply(self, status: int, body: bytes, content_type: str = "application/json") -> None:
            self.send_response(status)
            self.send_header("Content-Type", content_type)
            self.send_header("Content-Length", str(len(body)))
            self.send_header("Access-Control-Allow-Origin", "*")
            self.end_headers()
            self.wfile.write(body)

        def _reply_json(self, status: int, doc: Any) -> None:
            self._reply(status, canonical_json(doc))

        def _read_body(self) -> bytes:
            length = int(self.headers.get("Content-Length", "0"))
            return self.rfile.read(length)

        def do_OPTIONS(self):  # CORS preflight for the web console
            self.send_response(204)
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Methods", "GET, POST, PUT, OPTIONS")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.send_header("Content-Length", "0")
            self.end_headers()

        def do_GET(self):
            url = urlparse(self.path)
            if url.path == "/schema":
                doc = service.get_schema()
                if doc is None:
                    self._reply_json(404, {"error": "no schema configured"})
                else:
                    self._reply(200, doc)
            elif url.path == "/records":
                raw = parse_qs(url.query).get("after", ["0"])[0]
                try:
                    after = int(raw)
                    body = service.get_records(after)
                except ValueError:
                    self._reply_json(400, {"error": f"bad after={raw!r}"})
                    return
                self._reply_json(200, body)
            elif url.path.startswith("/blobs/"):
                digest = url.path[len("/blobs/"):]
                data = service.blobs.get(digest)
                if data is None:
                    self._reply_json(404, {"error": f"unknown blob {digest}"})
                else:
                    self._reply(200, data, content_type="application/octet-stream")
            elif url.path == "/healthz":
                self._reply_json(200, service.healthz())
            else:
                self._reply_json(404, {"error": f"no such path {url.path}"})

        def do_POST(self):
            url = urlparse(self.path)
            if url.path != "/records":
                self._reply_json(404, {"error": f"no such path {url.path}"})
                return
            try:
                doc = json.loads(self._read_body().decode("utf-8"))
                docs = doc["records"]
                if not isinstance(docs, list):
                    raise ValueError("records must be a list")
            except (ValueError, KeyError, UnicodeDecodeError) as exc:
                self._reply_json(400, {"error": f"malformed body: {exc}"})
                return
            try:
                result = service.post_records(docs)
            except PayloadConflict as exc:
                self._reply_json(409, {"error": "payload conflict", "id": str(exc.record_id)})
                return
            except (errors.MissingField, errors.TypeMismatch, errors.OutOfRange,
                    errors.BadCoordinate, errors.UnknownField, errors.InvalidRecord) as exc:
                field = getattr(exc, "name", None) or getattr(exc, "which", None)
                self._reply_json(422, {"error": str(exc), "field": field})
                return
            except errors.MalformedDocument as exc:
                self._reply_json(400, {"error": str(exc)})
                return
            self._reply_json(200, result)

        def do_PUT(self):
            url = urlparse(self.path)
            if not url.path.startswith("/blobs/"):
                self._reply_json(404, {"error": f"no such path {url.path}"})
                return
            digest = url.path[len("/blobs/"):]
            data = self._read_body()
            try:
                new = service.blobs.put(digest, data)
            except ValueError as exc:
                self._reply_json(400, {"error": str(exc)})
                return
            self._reply_json(200, {"hash": digest, "new": new})

    return Handler
