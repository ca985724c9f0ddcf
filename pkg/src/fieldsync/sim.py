"""Deterministic discrete-tick simulator for teams, movement, and sync.

Each tick runs a fixed phase order: advance device positions, apply data
entry events, sync every device in radio range with the edge relay, sync
edge with cloud on its cadence while the cloud is up, then any direct
device-to-cloud sessions. All sessions are in-process; every event lands in
a trace whose replay reproduces the final stores exactly. Nothing is
wall-clock driven, so a scenario always yields the same byte-level trace.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import Any, Iterable, Sequence

from .errors import InvalidInterval, MalformedScenario, UnknownField
from .geo import GridSpec, local_unproject
from .model import (
    FreshnessState,
    Record,
    RecordId,
    Schema,
    canonical_json,
    next_record_id,
    parse_schema,
    record_from_doc,
    record_to_doc,
    validate_record,
)
from .sync import Replica, SyncReport, Tier

SIM_EPOCH = datetime(2024, 1, 1, tzinfo=timezone.utc)


@dataclass(frozen=True)
class DevicePlan:
    device_id: str
    waypoints: tuple[tuple[int, float, float], ...]
    entries: tuple[tuple[int, dict], ...]
    direct_cloud: bool = False
    author: str = ""
    team: str = ""

    def position_at(self, tick: int) -> tuple[float, float]:
        """Linear interpolation between waypoints; clamped at the ends."""
        points = self.waypoints
        if tick <= points[0][0]:
            return points[0][1], points[0][2]
        if tick >= points[-1][0]:
            return points[-1][1], points[-1][2]
        for (t0, x0, y0), (t1, x1, y1) in zip(points, points[1:]):
            if t0 <= tick <= t1:
                f = (tick - t0) / (t1 - t0)
                return x0 + f * (x1 - x0), y0 + f * (y1 - y0)
        raise AssertionError("waypoints not covering tick")  # unreachable


@dataclass(frozen=True)
class Scenario:
    seed: int
    ticks: int
    grid: GridSpec
    schema: Schema
    devices: tuple[DevicePlan, ...]
    edge_position: tuple[float, float]
    edge_range_m: float
    cloud_uptime: tuple[tuple[int, int], ...]
    edge_sync_interval: int

    def cloud_up(self, tick: int) -> bool:
        return any(start <= tick <= end for start, end in self.cloud_uptime)


def load_scenario(document: bytes | str | dict) -> Scenario:
    """Parse and validate the scenario file format."""
    if isinstance(document, (bytes, str)):
        try:
            doc = json.loads(document)
        except json.JSONDecodeError as exc:
            raise MalformedScenario(f"not valid JSON: {exc}") from None
    else:
        doc = document
    if not isinstance(doc, dict):
        raise MalformedScenario("scenario must be a JSON object")

    def need(key: str) -> Any:
        if key not in doc:
            raise MalformedScenario(f"missing key {key!r}", location=key)
        return doc[key]

    ticks = need("ticks")
    if not isinstance(ticks, int) or ticks < 1:
        raise MalformedScenario(f"ticks must be an integer >= 1, got {ticks!r}", location="ticks")

    try:
        grid = GridSpec.from_doc(need("grid"))
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedScenario(f"bad grid: {exc}", location="grid") from None
    schema = parse_schema(canonical_json(need("schema")))

    edge_doc = need("edge")
    try:
        edge_position = (float(edge_doc["x_m"]), float(edge_doc["y_m"]))
        edge_range = float(edge_doc["range_m"])
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedScenario(f"bad edge: {exc}", location="edge") from None

    uptime: list[tuple[int, int]] = []
    for i, pair in enumerate(doc.get("cloud_uptime", [])):
        try:
            start, end = int(pair[0]), int(pair[1])
        except (TypeError, ValueError, IndexError):
            raise InvalidInterval(f"cloud_uptime[{i}] must be [start, end]") from None
        if not 0 <= start <= end <= ticks:
            raise InvalidInterval(f"cloud_uptime[{i}] [{start}, {end}] outside [0, {ticks}]")
        uptime.append((start, end))
    uptime.sort()
    for (s0, e0), (s1, e1) in zip(uptime, uptime[1:]):
        if s1 <= e0:
            raise InvalidInterval(f"cloud_uptime intervals [{s0},{e0}] and [{s1},{e1}] overlap")

    interval = doc.get("edge_sync_interval", 1)
    if not isinstance(interval, int) or interval < 1:
        raise MalformedScenario("edge_sync_interval must be an integer >= 1",
                                location="edge_sync_interval")

    known_fields = set(schema.field_names)
    plans: list[DevicePlan] = []
    seen_ids: set[str] = set()
    for i, dev in enumerate(need("devices")):
        where = f"devices[{i}]"
        try:
            device_id = dev["device_id"]
        except (TypeError, KeyError):
            raise MalformedScenario("device_id required", location=where) from None
        if device_id in seen_ids:
            raise MalformedScenario(f"duplicate device_id {device_id!r}", location=where)
        seen_ids.add(device_id)

        raw_waypoints = dev.get("waypoints") or [[0, 0.0, 0.0]]
        waypoints = []
        last_tick = -1
        for wp in raw_waypoints:
            try:
                t, x, y = int(wp[0]), float(wp[1]), float(wp[2])
            except (TypeError, ValueError, IndexError):
                raise MalformedScenario(f"bad waypoint {wp!r}", location=where) from None
            if t <= last_tick:
                raise MalformedScenario("waypoint ticks must be strictly increasing", location=where)
            last_tick = t
            waypoints.append((t, x, y))

        entries = []
        for entry in dev.get("entries", []):
            try:
                t, values = int(entry[0]), dict(entry[1])
            except (TypeError, ValueError, IndexError):
                raise MalformedScenario(f"bad entry {entry!r}", location=where) from None
            if not 0 <= t < ticks:
                raise MalformedScenario(f"entry tick {t} outside [0, {ticks})", location=where)
            for name in values:
                if name not in known_fields:
                    raise UnknownField(name)
            entries.append((t, values))
        entries.sort(key=lambda pair: pair[0])

        plans.append(DevicePlan(
            device_id=device_id,
            waypoints=tuple(waypoints),
            entries=tuple(entries),
            direct_cloud=bool(dev.get("direct_cloud", False)),
            author=str(dev.get("author", device_id)),
            team=str(dev.get("team", "field")),
        ))
    if not plans:
        raise MalformedScenario("scenario needs at least one device", location="devices")

    return Scenario(
        seed=int(doc.get("seed", 0)),
        ticks=ticks,
        grid=grid,
        schema=schema,
        devices=tuple(plans),
        edge_position=edge_position,
        edge_range_m=edge_range,
        cloud_uptime=tuple(uptime),
        edge_sync_interval=interval,
    )


# -- trace events -----------------------------------------------------------------

@dataclass(frozen=True)
class EnterEvent:
    tick: int
    device: str
    record_id: RecordId
    record_doc: dict

    def to_doc(self) -> dict:
        return {"type": "ENTER", "tick": self.tick, "device": self.device,
                "record_id": str(self.record_id), "record": self.record_doc}


@dataclass(frozen=True)
class SyncEvent:
    tick: int
    source: str
    peer: str
    pushed_ids: tuple[str, ...]
    pulled_ids: tuple[str, ...]

    def to_doc(self) -> dict:
        return {"type": "SYNC", "tick": self.tick, "source": self.source,
                "peer": self.peer, "pushed_ids": list(self.pushed_ids),
                "pulled_ids": list(self.pulled_ids)}


@dataclass(frozen=True)
class PromoteEvent:
    tick: int
    device: str
    record_id: RecordId
    state: FreshnessState

    def to_doc(self) -> dict:
        return {"type": "PROMOTE", "tick": self.tick, "device": self.device,
                "record_id": str(self.record_id), "state": self.state.name}


TraceEvent = EnterEvent | SyncEvent | PromoteEvent


def trace_to_jsonl(trace: Sequence[TraceEvent]) -> bytes:
    return b"\n".join(canonical_json(event.to_doc()) for event in trace) + (b"\n" if trace else b"")


# -- simulation state ---------------------------------------------------------------

@dataclass
class SimState:
    scenario: Scenario
    replicas: dict[str, Replica]
    positions: dict[str, tuple[float, float]]
    counters: dict[str, int]
    trace: list[TraceEvent] = field(default_factory=list)

    @classmethod
    def create(cls, scenario: Scenario) -> "SimState":
        replicas = {"edge": Replica.create(Tier.EDGE, "edge"),
                    "cloud": Replica.create(Tier.CLOUD, "cloud")}
        positions = {}
        counters = {}
        for plan in scenario.devices:
            replicas[plan.device_id] = Replica.create(Tier.DEVICE, plan.device_id)
            positions[plan.device_id] = plan.position_at(0)
            counters[plan.device_id] = -1
        return cls(scenario=scenario, replicas=replicas, positions=positions, counters=counters)


def _record_for_entry(state: SimState, plan: DevicePlan, tick: int, values: dict) -> Record:
    scenario = state.scenario
    x, y = state.positions[plan.device_id]
    lat, lon = local_unproject(x, y, scenario.grid)
    state.counters[plan.device_id] += 1
    draft = {
        "id": next_record_id(plan.device_id, state.counters[plan.device_id] - 1),
        "ts": SIM_EPOCH + timedelta(seconds=tick),
        "lat": lat,
        "lon": lon,
        "author": plan.author,
        "team": plan.team,
        "source": "manual",
        "values": values,
    }
    return validate_record(scenario.schema, draft)


def _session(state: SimState, tick: int, source_id: str, peer_id: str) -> SyncReport:
    source = state.replicas[source_id]
    peer = state.replicas[peer_id]
    report = source.sync_with(peer.as_peer())
    state.trace.append(SyncEvent(
        tick=tick,
        source=source_id,
        peer=peer_id,
        pushed_ids=tuple(str(rid) for rid in report.pushed_ids),
        pulled_ids=tuple(str(rid) for rid in report.pulled_ids),
    ))
    for record_id, new_state in report.promoted:
        state.trace.append(PromoteEvent(tick=tick, device=source_id,
                                        record_id=record_id, state=new_state))
    return report


def step(state: SimState, tick: int) -> None:
    """Advance one tick through the fixed phase order."""
    scenario = state.scenario

    for plan in scenario.devices:
        state.positions[plan.device_id] = plan.position_at(tick)

    for plan in scenario.devices:
        for entry_tick, values in plan.entries:
            if entry_tick == tick:
                record = _record_for_entry(state, plan, tick, values)
                state.replicas[plan.device_id].insert(record)
                state.trace.append(EnterEvent(tick=tick, device=plan.device_id,
                                              record_id=record.id,
                                              record_doc=record_to_doc(record)))

    for plan in scenario.devices:
        pos = state.positions[plan.device_id]
        if math.dist(pos, scenario.edge_position) <= scenario.edge_range_m:
            _session(state, tick, plan.device_id, "edge")

    if tick % scenario.edge_sync_interval == 0 and scenario.cloud_up(tick):
        _session(state, tick, "edge", "cloud")

    for plan in scenario.devices:
        if plan.direct_cloud and scenario.cloud_up(tick):
            _session(state, tick, plan.device_id, "cloud")


@dataclass
class ConvergenceReport:
    converged: bool
    record_counts: dict[str, int]
    stragglers: dict[str, list[str]]

    def to_doc(self) -> dict:
        return {"converged": self.converged, "record_counts": self.record_counts,
                "stragglers": self.stragglers}

    def to_text(self) -> str:
        lines = [f"converged: {str(self.converged).lower()}"]
        for store_id in sorted(self.record_counts):
            lines.append(f"  {store_id}: {self.record_counts[store_id]} records")
        for store_id, missing in sorted(self.stragglers.items()):
            lines.append(f"  {store_id} missing: {', '.join(missing)}")
        return "\n".join(lines)


@dataclass
class SimResult:
    state: SimState
    trace: list[TraceEvent]
    convergence: ConvergenceReport


def convergence_report(replicas: dict[str, Replica]) -> ConvergenceReport:
    id_sets = {sid: {str(rid) for rid in replica.store.ids()}
               for sid, replica in replicas.items()}
    union: set[str] = set().union(*id_sets.values()) if id_sets else set()
    stragglers = {sid: sorted(union - ids) for sid, ids in id_sets.items() if union - ids}
    return ConvergenceReport(
        converged=not stragglers,
        record_counts={sid: len(ids) for sid, ids in id_sets.items()},
        stragglers=stragglers,
    )


def run(scenario: Scenario) -> SimResult:
    """Run a scenario start to finish; deterministic for fixed inputs."""
    state = SimState.create(scenario)
    for tick in range(scenario.ticks):
        step(state, tick)
    return SimResult(state=state, trace=state.trace,
                     convergence=convergence_report(state.replicas))


# -- trace verification ---------------------------------------------------------------

# States implied by each store's tier when it first holds a record; ENTER
# implies UNSYNCED on the entering device.
_TIER_FLOOR = {"edge": FreshnessState.EDGE_CACHED, "cloud": FreshnessState.REMOTE}


@dataclass
class PropertyReport:
    ok: bool
    violations: list[dict]

    def to_doc(self) -> dict:
        return {"ok": self.ok, "violations": self.violations}


def check_trace(trace: Iterable[TraceEvent]) -> PropertyReport:
    """Verify ledger monotonicity, unique ids, and exactly-once delivery.

    Violations carry the property name and the tick of first occurrence;
    an empty trace passes vacuously.
    """
    violations: list[dict] = []
    states: dict[tuple[str, str], FreshnessState] = {}
    entered: set[str] = set()
    delivered: dict[tuple[str, str], set[str]] = {}

    for event in trace:
        if isinstance(event, EnterEvent):
            rid = str(event.record_id)
            if rid in entered:
                violations.append({"property": "unique-record-ids", "tick": event.tick,
                                   "detail": f"record {rid} entered twice"})
            entered.add(rid)
            key = (event.device, rid)
            if key not in states:
                states[key] = FreshnessState.UNSYNCED
        elif isinstance(event, PromoteEvent):
            key = (event.device, str(event.record_id))
            previous = states.get(key)
            if previous is not None and event.state <= previous:
                violations.append({
                    "property": "ledger-monotonicity", "tick": event.tick,
                    "detail": f"{event.device} {event.record_id}: "
                              f"{previous.name} -> {event.state.name}",
                })
            states[key] = event.state
        elif isinstance(event, SyncEvent):
            for direction, ids in ((f"{event.source}->{event.peer}", event.pushed_ids),
                                   (f"{event.peer}->{event.source}", event.pulled_ids)):
                seen = delivered.setdefault(("delivery", direction), set())
                for rid in ids:
                    if rid in seen:
                        violations.append({"property": "exactly-once-delivery",
                                           "tick": event.tick,
                                           "detail": f"{rid} re-delivered on {direction}"})
                    seen.add(rid)

    return PropertyReport(ok=not violations, violations=violations)


def random_scenario_doc(seed: int, max_devices: int = 5, max_ticks: int = 500,
                        max_records: int = 200) -> dict:
    """Seeded random scenario ending in a full-connectivity epoch.

    The closing epoch parks every device at the edge relay with the cloud up
    for several sync cadences, which is what makes eventual convergence a
    testable guarantee rather than a matter of luck.
    """
    import random as _random

    rng = _random.Random(seed)
    interval = rng.randint(1, 5)
    epoch = 3 * interval + 3
    ticks = rng.randint(epoch + 10, max_ticks)
    n_devices = rng.randint(1, max_devices)
    total_records = rng.randint(1, max_records)
    edge_x, edge_y = rng.uniform(0, 50), rng.uniform(0, 50)
    entry_limit = ticks - epoch - 1

    quotas = [0] * n_devices
    for _ in range(total_records):
        quotas[rng.randrange(n_devices)] += 1

    devices = []
    for i in range(n_devices):
        mid_ticks = sorted(rng.sample(range(1, max(2, entry_limit)),
                                      k=min(rng.randint(0, 3), max(1, entry_limit - 1))))
        waypoints = [[0, rng.uniform(-60, 110), rng.uniform(-60, 110)]]
        waypoints += [[t, rng.uniform(-60, 110), rng.uniform(-60, 110)]
                      for t in mid_ticks]
        waypoints.append([ticks - epoch, edge_x, edge_y])
        entries = [[rng.randint(0, max(0, entry_limit)),
                    {"scorch": round(rng.uniform(0, 100), 2)}]
                   for _ in range(quotas[i])]
        entries.sort(key=lambda e: e[0])
        devices.append({
            "device_id": f"unit-{i}",
            "waypoints": waypoints,
            "entries": entries,
            "direct_cloud": rng.random() < 0.2,
        })

    uptime = []
    if entry_limit > 8:
        points = sorted(rng.sample(range(entry_limit), k=4))
        uptime = [[points[0], points[1]], [points[2], points[3]]]
    uptime.append([ticks - epoch, ticks])

    return {
        "seed": seed,
        "ticks": ticks,
        "grid": {"origin_lat": 40.0, "origin_lon": -105.0, "cell_size_m": 10.0,
                 "rows": 5, "cols": 5, "target_per_cell": 3},
        "schema": {"schema_id": "scorch-survey", "version": 1,
                   "fields": [{"name": "scorch", "kind": "numeric",
                               "required": True, "numeric_range": [0, 100]}]},
        "edge": {"x_m": edge_x, "y_m": edge_y, "range_m": rng.uniform(20, 120)},
        "cloud_uptime": uptime,
        "edge_sync_interval": interval,
        "devices": devices,
    }


def replay_trace(trace: Iterable[TraceEvent]) -> dict[str, list[dict]]:
    """Rebuild every store's insertion order purely from trace events."""
    registry: dict[str, dict] = {}
    stores: dict[str, list[str]] = {}

    def add(store_id: str, rid: str) -> None:
        order = stores.setdefault(store_id, [])
        if rid not in order:
            order.append(rid)

    for event in trace:
        if isinstance(event, EnterEvent):
            registry[str(event.record_id)] = event.record_doc
            add(event.device, str(event.record_id))
        elif isinstance(event, SyncEvent):
            stores.setdefault(event.source, [])
            stores.setdefault(event.peer, [])
            for rid in event.pushed_ids:
                add(event.peer, rid)
            for rid in event.pulled_ids:
                add(event.source, rid)
    return {store_id: [registry[rid] for rid in order]
            for store_id, order in stores.items()}
