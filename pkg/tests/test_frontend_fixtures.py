"""Guard: the committed frontend contract fixtures match the implementation.

The web console's tests consume frontend/fixtures/ as their oracle; this
test regenerates the same documents in-memory and fails on any drift, so
the two components cannot silently disagree.
"""

from __future__ import annotations

import importlib.util
import json
from pathlib import Path

import pytest

REPO = Path(__file__).resolve().parent.parent
FIXTURES = REPO / "frontend" / "fixtures"

spec = importlib.util.spec_from_file_location(
    "gen_frontend_fixtures", REPO / "scripts" / "gen_frontend_fixtures.py")
gen = importlib.util.module_from_spec(spec)
spec.loader.exec_module(gen)


@pytest.mark.parametrize("name", [
    "schema.json", "form-schema.json", "grid.json", "records.json", "coverage.json",
    "histories.json", "validation.json",
])
def test_fixture_in_sync(name):
    built = gen.build_fixtures()
    committed = json.loads((FIXTURES / name).read_text())
    assert committed == json.loads(json.dumps(built[name])), (
        f"{name} drifted; rerun scripts/gen_frontend_fixtures.py")
