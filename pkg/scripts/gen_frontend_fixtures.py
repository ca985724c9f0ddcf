#!/usr/bin/env python3
"""Regenerate the frontend contract fixtures from the live Python side.

Writes frontend/fixtures/: the schema document, a crafted record set, the
CLI coverage/history analytics for it, and real 422 validation responses
captured from a running tier service. tests/test_frontend_fixtures.py
fails whenever these files drift from the implementation.
"""

from __future__ import annotations

import json
import sys
import tempfile
from pathlib import Path

import requests

REPO = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(REPO / "tests"))

from tests_support import DEFAULT_GRID, SIMPLE_SCHEMA, simple_record  # noqa: E402

from fieldsync.cli import coverage_json_doc  # noqa: E402
from fieldsync.geo import CellIndex, cell_history  # noqa: E402
from fieldsync.model import parse_schema, record_to_doc, serialize_schema  # noqa: E402
from fieldsync.service import ServiceConfig, TierService  # noqa: E402
from fieldsync.sync import Tier  # noqa: E402

FIXTURES = REPO / "frontend" / "fixtures"

# all five collectible kinds, for the entry form and validation parity
FORM_SCHEMA = parse_schema(json.dumps({
    "schema_id": "scorch-survey-full",
    "version": 2,
    "fields": [
        {"name": "scorch", "kind": "numeric", "unit": "percent",
         "required": True, "numeric_range": [0, 100]},
        {"name": "note", "kind": "text", "required": False},
        {"name": "sampled_at", "kind": "time", "required": False},
        {"name": "plot_corner", "kind": "gps", "required": False},
        {"name": "site_photo", "kind": "image", "required": False},
    ],
}))


def record_set():
    """Crafted set: multiple cells, a timestamp tie, and an off-grid record."""
    return [
        simple_record("alpha", 0, x_m=5.0, y_m=5.0, scorch=20.0, tick=100),
        simple_record("alpha", 1, x_m=5.0, y_m=5.0, scorch=30.0, tick=300),
        # timestamp tie in cell (0,0): id tie-break orders alpha/2 before beta/0
        simple_record("alpha", 2, x_m=7.0, y_m=3.0, scorch=40.0, tick=500),
        simple_record("beta", 0, x_m=3.0, y_m=7.0, scorch=50.0, tick=500),
        simple_record("beta", 1, x_m=25.0, y_m=15.0, scorch=60.0, tick=700),
        simple_record("beta", 2, x_m=45.0, y_m=45.0, scorch=70.0, tick=900),
        simple_record("gamma", 0, x_m=45.0, y_m=45.0, scorch=80.0, tick=800),
        simple_record("gamma", 1, x_m=-5.0, y_m=10.0, scorch=90.0, tick=1000),  # off grid
    ]


INVALID_DRAFTS = [
    {"case": "out_of_range", "values": {"scorch": 142.0}},
    {"case": "type_mismatch_numeric", "values": {"scorch": "hot"}},
    {"case": "missing_required", "values": {"note": "no scorch"}},
    {"case": "unknown_field", "values": {"scorch": 10.0, "wind": 3.0}},
    {"case": "bad_image_ref", "values": {"scorch": 10.0, "site_photo": "xyz"}},
    {"case": "bad_time", "values": {"scorch": 10.0, "sampled_at": "yesterday"}},
    {"case": "bad_gps_shape", "values": {"scorch": 10.0, "plot_corner": "here"}},
    {"case": "gps_out_of_bounds", "values": {"scorch": 10.0, "plot_corner": [95.0, 0.0]}},
    {"case": "bad_text", "values": {"scorch": 10.0, "note": 7.0}},
]


def capture_validation_responses():
    with tempfile.TemporaryDirectory() as tmp:
        service = TierService(
            ServiceConfig(tier=Tier.CLOUD, data_dir=Path(tmp)),
            schema_doc=serialize_schema(FORM_SCHEMA))
        service.start()
        try:
            out = []
            for case in INVALID_DRAFTS:
                doc = record_to_doc(simple_record("probe", 0))
                doc["schema_id"] = FORM_SCHEMA.schema_id
                doc["schema_version"] = FORM_SCHEMA.version
                doc["values"] = case["values"]
                resp = requests.post(service.base_url + "/records",
                                     json={"records": [doc]}, timeout=5)
                out.append({
                    "case": case["case"],
                    "values": case["values"],
                    "status": resp.status_code,
                    "response": resp.json(),
                })
            return out
        finally:
            service.stop()


def build_fixtures() -> dict[str, object]:
    records = record_set()
    docs = [record_to_doc(r) for r in records]
    histories = {}
    for row in range(DEFAULT_GRID.rows):
        for col in range(DEFAULT_GRID.cols):
            ids = [str(r.id) for r in cell_history(records, CellIndex(row, col), DEFAULT_GRID)]
            if ids:
                histories[f"{row},{col}"] = ids
    return {
        "schema.json": json.loads(serialize_schema(SIMPLE_SCHEMA)),
        "form-schema.json": json.loads(serialize_schema(FORM_SCHEMA)),
        "grid.json": DEFAULT_GRID.to_doc(),
        "records.json": docs,
        "coverage.json": coverage_json_doc(records, DEFAULT_GRID),
        "histories.json": histories,
        "validation.json": capture_validation_responses(),
    }


def main() -> int:
    FIXTURES.mkdir(parents=True, exist_ok=True)
    for name, doc in build_fixtures().items():
        path = FIXTURES / name
        path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")
        print(f"wrote {path}")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
