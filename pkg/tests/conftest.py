"""Shared fixtures: the scorch-rate schema, a grid, and record factories."""

from __future__ import annotations

import json
from datetime import timedelta

import pytest

from fieldsync.geo import GridSpec, local_unproject
from fieldsync.model import parse_schema, validate_record
from fieldsync.sim import SIM_EPOCH

SCORCH_SCHEMA_DOC = {
    "schema_id": "scorch-survey",
    "version": 1,
    "fields": [
        {"name": "scorch", "kind": "numeric", "unit": "percent",
         "required": True, "numeric_range": [0, 100]},
        {"name": "note", "kind": "text", "required": False},
        {"name": "site_photo", "kind": "image", "required": False},
    ],
}


@pytest.fixture
def schema_doc() -> bytes:
    return json.dumps(SCORCH_SCHEMA_DOC).encode("utf-8")


@pytest.fixture
def schema(schema_doc):
    return parse_schema(schema_doc)


@pytest.fixture
def grid() -> GridSpec:
    return GridSpec(origin_lat=40.0, origin_lon=-105.0, cell_size_m=10.0,
                    rows=5, cols=5, target_per_cell=3)


@pytest.fixture
def make_record(schema, grid):
    """Factory: record at grid-local meters with a scorch value."""

    counters: dict[str, int] = {}

    def factory(x_m: float = 5.0, y_m: float = 5.0, scorch: float = 50.0,
                device: str = "teamA-phone1", tick: int = 0, **extra):
        lat, lon = local_unproject(x_m, y_m, grid)
        counters[device] = counters.get(device, -1) + 1
        draft = {
            "id": f"{device}/{counters[device]}",
            "ts": SIM_EPOCH + timedelta(seconds=tick),
            "lat": lat,
            "lon": lon,
            "author": device,
            "team": "teamA",
            "source": "manual",
            "values": {"scorch": scorch, **extra},
        }
        return validate_record(schema, draft)

    return factory


def pytest_runtest_logreport(report):
    # one visible pass/fail line per acceptance criterion
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        print(f"\n[acceptance] {name}: {report.outcome.upper()}")
