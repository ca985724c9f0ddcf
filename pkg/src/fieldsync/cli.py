"""Operator-facing command line.

Every command is a thin adapter over the library modules: collect and sync
drive the device node, the report commands print geo-analytics results,
serve runs a tier service, simulate runs the discrete-tick simulator, and
renderplan exports wedge/HUD geometry.

Config resolution order: flag > environment (FIELDSYNC_*) > config file.
Exit codes: 0 ok, 2 validation or config error, 3 peer offline, 4 service
failure.
"""

from __future__ import annotations

import json
import sys
from dataclasses import dataclass
from pathlib import Path

import click

from . import errors
from .device import DeviceNode
from .errors import ConfigError, PeerUnreachable
from .geo import (
    AnomalyParams,
    CellCounts,
    GridSpec,
    coverage,
    detect_anomalies,
    missing_cells,
    under_sampled_cells,
)
from .model import (
    FreshnessState,
    Record,
    Schema,
    canonical_json,
    parse_schema,
    record_to_doc,
)
from .service import ServiceConfig, TierService
from .storage import content_hash, encode_frame, save_ledger
from .sync import FreshnessLedger, Tier, TierStore
from .viewgeom import ViewerPose, Viewport, build_render_plan

_STATE_LETTERS = {
    FreshnessState.UNSYNCED: "R",
    FreshnessState.EDGE_CACHED: "G",
    FreshnessState.REMOTE: "B",
}


@dataclass
class CliConfig:
    device_id: str | None = None
    data_dir: Path | None = None
    schema_path: Path | None = None
    edge_url: str | None = None
    cloud_url: str | None = None
    grid: GridSpec | None = None

    def require(self, attr: str):
        value = getattr(self, attr)
        if value is None:
            raise ConfigError(f"{attr} not configured (flag, FIELDSYNC_* env, or config file)")
        return value


def _resolve_config(opts: dict) -> CliConfig:
    cfg = CliConfig()
    path = opts.get("config_path")
    if path:
        try:
            doc = json.loads(Path(path).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        cfg.device_id = doc.get("device_id")
        cfg.data_dir = Path(doc["data_dir"]) if doc.get("data_dir") else None
        cfg.schema_path = Path(doc["schema"]) if doc.get("schema") else None
        cfg.edge_url = doc.get("edge_url")
        cfg.cloud_url = doc.get("cloud_url")
        if doc.get("grid"):
            cfg.grid = GridSpec.from_doc(doc["grid"])
    if opts.get("device_id"):
        cfg.device_id = opts["device_id"]
    if opts.get("data_dir"):
        cfg.data_dir = Path(opts["data_dir"])
    if opts.get("schema_path"):
        cfg.schema_path = Path(opts["schema_path"])
    if opts.get("edge_url"):
        cfg.edge_url = opts["edge_url"]
    if opts.get("cloud_url"):
        cfg.cloud_url = opts["cloud_url"]
    return cfg


def _load_schema(cfg: CliConfig) -> Schema:
    return parse_schema(Path(cfg.require("schema_path")).read_bytes())


def _open_device(cfg: CliConfig) -> DeviceNode:
    return DeviceNode(cfg.require("device_id"), cfg.require("data_dir"))


# -- report formatting (shared with golden tests) ------------------------------

def format_value(value) -> str:
    if isinstance(value, float):
        return str(int(value)) if value.is_integer() else repr(value)
    if isinstance(value, (list, tuple)):
        return ",".join(format_value(v) for v in value)
    return str(value)


def format_status(records: list[Record], ledger: FreshnessLedger) -> str:
    if not records:
        return "no records"
    id_width = max(len(str(r.id)) for r in records)
    lines = []
    for record in records:
        letter = _STATE_LETTERS[ledger.state_of(record.id)]
        values = " ".join(f"{k}={format_value(v)}" for k, v in record.values.items())
        ts = record_to_doc(record)["ts"]
        lines.append(f"{letter} {str(record.id):<{id_width}} {ts} {values}".rstrip())
    return "\n".join(lines)


def format_coverage(counts: CellCounts) -> str:
    width = max(
        [len(str(v)) for row in counts.counts for v in row]
        + [len(f"c{counts.cols - 1}")]
    )
    label_width = len(f"r{counts.rows - 1}")
    header = " " * label_width + "".join(f" {f'c{c}':>{width}}" for c in range(counts.cols))
    lines = [header]
    for r in range(counts.rows):
        cells = "".join(f" {counts.counts[r][c]:>{width}}" for c in range(counts.cols))
        lines.append(f"{f'r{r}':<{label_width}}{cells}")
    lines.append(f"out_of_bounds: {counts.out_of_bounds}")
    return "\n".join(lines)


def format_missing(cells) -> str:
    if not cells:
        return "no missing cells"
    return "\n".join(f"{cell.row},{cell.col}" for cell in cells)


def coverage_json_doc(records: list[Record], grid: GridSpec) -> dict:
    counts = coverage(records, grid)
    return {
        "counts": counts.counts,
        "out_of_bounds": counts.out_of_bounds,
        "missing": [{"row": c.row, "col": c.col} for c in missing_cells(counts)],
        "under_sampled": [
            {"row": c.row, "col": c.col, "deficit": d}
            for c, d in under_sampled_cells(counts, grid)
        ],
    }


def _echo_json(doc) -> None:
    click.echo(canonical_json(doc).decode("utf-8"))


# -- commands -------------------------------------------------------------------

@click.group()
@click.option("--config", "config_path", envvar="FIELDSYNC_CONFIG",
              type=click.Path(), help="JSON config file.")
@click.option("--device-id", envvar="FIELDSYNC_DEVICE_ID")
@click.option("--data-dir", envvar="FIELDSYNC_DATA_DIR", type=click.Path())
@click.option("--schema", "schema_path", envvar="FIELDSYNC_SCHEMA", type=click.Path())
@click.option("--edge-url", envvar="FIELDSYNC_EDGE_URL")
@click.option("--cloud-url", envvar="FIELDSYNC_CLOUD_URL")
@click.pass_context
def cli(ctx, **opts):
    """Offline-first field data collection and analysis."""
    ctx.obj = opts


def _coerce_pairs(schema: Schema, pairs: tuple[str, ...]) -> dict:
    values: dict = {}
    for pair in pairs:
        name, sep, raw = pair.partition("=")
        if not sep:
            raise ConfigError(f"expected FIELD=VALUE, got {pair!r}")
        try:
            spec = schema.field_named(name)
        except errors.UnknownField:
            raise errors.UnknownField(name) from None
        if spec.kind == "numeric":
            try:
                values[name] = float(raw)
            except ValueError:
                raise errors.TypeMismatch(name, "numeric") from None
        elif spec.kind == "gps":
            parts = raw.split(",")
            if len(parts) != 2:
                raise errors.TypeMismatch(name, "gps lat,lon")
            values[name] = [float(parts[0]), float(parts[1])]
        else:
            values[name] = raw
    return values


@cli.command()
@click.argument("pairs", nargs=-1)
@click.option("--lat", type=float, required=True)
@click.option("--lon", type=float, required=True)
@click.option("--image", "image_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--author", default="")
@click.option("--team", default="")
@click.option("--source", default="manual",
              type=click.Choice(["manual", "sensor", "archival"]))
@click.option("--ts", default=None, help="RFC 3339 timestamp; defaults to now.")
@click.pass_obj
def collect(opts, pairs, lat, lon, image_path, author, team, source, ts):
    """Enter one record; stays local (red) until the next sync."""
    cfg = _resolve_config(opts)
    schema = _load_schema(cfg)
    device = _open_device(cfg)
    values = _coerce_pairs(schema, pairs)

    image_refs = []
    if image_path:
        data = Path(image_path).read_bytes()
        digest = content_hash(data)
        device.blobs.put(digest, data)
        image_refs.append(digest)
        image_fields = [s.name for s in schema.fields if s.kind == "image"]
        if len(image_fields) == 1 and image_fields[0] not in values:
            values[image_fields[0]] = digest

    draft = {
        "lat": lat, "lon": lon, "author": author, "team": team,
        "source": source, "values": values, "image_refs": image_refs,
    }
    if ts:
        draft["ts"] = ts
    record = device.collect(schema, draft)
    device.close()
    click.echo(f"{record.id} {FreshnessState.UNSYNCED.name}")


@cli.command()
@click.option("--peer", type=click.Choice(["edge", "cloud"]), required=True)
@click.pass_obj
def sync(opts, peer):
    """Run one bidirectional sync session against the edge or cloud."""
    cfg = _resolve_config(opts)
    url = cfg.require(f"{peer}_url")
    device = _open_device(cfg)
    try:
        report = device.sync(url)
    finally:
        device.close()
    parts = [f"pushed {report.pushed}, pulled {report.pulled}"]
    by_state: dict[FreshnessState, int] = {}
    for _, state in report.promoted:
        by_state[state] = by_state.get(state, 0) + 1
    for state in sorted(by_state):
        parts.append(f"promoted {by_state[state]}→{state.name}")
    click.echo(", ".join(parts))


@cli.command()
@click.option("--json", "as_json", is_flag=True)
@click.pass_obj
def status(opts, as_json):
    """List local records with their freshness class (R/G/B)."""
    cfg = _resolve_config(opts)
    device = _open_device(cfg)
    records = device.store.in_seq_order()
    if as_json:
        _echo_json([
            {
                "id": str(r.id),
                "state": device.ledger.state_of(r.id).name,
                "color": {"R": "red", "G": "green", "B": "blue"}[
                    _STATE_LETTERS[device.ledger.state_of(r.id)]
                ],
                "record": record_to_doc(r),
            }
            for r in records
        ])
    else:
        click.echo(format_status(records, device.ledger))
    device.close()


def _grid_and_records(opts) -> tuple[GridSpec, list[Record], CliConfig]:
    cfg = _resolve_config(opts)
    grid = cfg.require("grid")
    device = _open_device(cfg)
    records = device.store.in_seq_order()
    device.close()
    return grid, records, cfg


@cli.command("coverage")
@click.option("--json", "as_json", is_flag=True)
@click.pass_obj
def coverage_cmd(opts, as_json):
    """Per-cell record counts over the configured grid."""
    grid, records, _ = _grid_and_records(opts)
    if as_json:
        _echo_json(coverage_json_doc(records, grid))
    else:
        click.echo(format_coverage(coverage(records, grid)))


@cli.command("missing")
@click.option("--json", "as_json", is_flag=True)
@click.pass_obj
def missing_cmd(opts, as_json):
    """Grid cells with no collected data."""
    grid, records, _ = _grid_and_records(opts)
    cells = missing_cells(coverage(records, grid))
    if as_json:
        _echo_json([{"row": c.row, "col": c.col} for c in cells])
    else:
        click.echo(format_missing(cells))


@cli.command("anomalies")
@click.option("--field", "field_name", required=True)
@click.option("--threshold", type=float, default=3.0, show_default=True)
@click.option("--json", "as_json", is_flag=True)
@click.pass_obj
def anomalies_cmd(opts, field_name, threshold, as_json):
    """Robust-z outliers of a numeric field against cell neighborhoods."""
    grid, records, _ = _grid_and_records(opts)
    flagged = detect_anomalies(records, grid, AnomalyParams(field_name, threshold))
    if as_json:
        _echo_json([{"id": str(rid), "robust_z": z} for rid, z in flagged])
    elif not flagged:
        click.echo("no anomalies")
    else:
        for rid, z in flagged:
            click.echo(f"{rid} z={z:.2f}")


@cli.command()
@click.option("--tier", type=click.Choice(["edge", "cloud"]), required=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", type=int, default=8600, show_default=True)
@click.option("--upstream", default=None, help="Cloud base URL (edge only).")
@click.option("--interval", type=float, default=5.0, show_default=True,
              help="Upstream sync interval in seconds (edge only).")
@click.pass_context
def serve(ctx, tier, host, port, upstream, interval):
    """Run a tier service (blocks until interrupted)."""
    cfg = _resolve_config(ctx.obj)
    service_config = ServiceConfig(
        tier=Tier(tier),
        host=host,
        port=port,
        data_dir=cfg.require("data_dir"),
        upstream=upstream,
        upstream_sync_interval=interval,
        schema_path=cfg.schema_path,
    )
    service = TierService(service_config)
    try:
        bound_host, bound_port = service.start()
    except OSError as exc:
        click.echo(f"cannot bind {host}:{port}: {exc}", err=True)
        ctx.exit(4)
        return
    click.echo(f"serving {tier} on http://{bound_host}:{bound_port}")
    try:
        import time

        while True:
            time.sleep(3600)
    except KeyboardInterrupt:
        pass
    finally:
        service.stop()


@cli.command()
@click.argument("scenario_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--dump-dir", type=click.Path(), default=None,
              help="Write each tier's final store + ledger under this directory.")
@click.option("--trace-out", type=click.Path(), default=None,
              help="Write the event trace as JSON lines.")
@click.option("--json", "as_json", is_flag=True)
def simulate(scenario_path, dump_dir, trace_out, as_json):
    """Run a scenario and report three-tier convergence."""
    from .sim import load_scenario, run, trace_to_jsonl

    scenario = load_scenario(Path(scenario_path).read_bytes())
    result = run(scenario)
    if trace_out:
        Path(trace_out).write_bytes(trace_to_jsonl(result.trace))
    if dump_dir:
        _dump_stores(Path(dump_dir), result.state.replicas)
    if as_json:
        _echo_json(result.convergence.to_doc())
    else:
        click.echo(result.convergence.to_text())


def _dump_stores(root: Path, replicas) -> None:
    for store_id, replica in replicas.items():
        store_dir = root / store_id
        store_dir.mkdir(parents=True, exist_ok=True)
        frames = b"".join(
            encode_frame(canonical_json(record_to_doc(r)))
            for r in replica.store.in_seq_order()
        )
        (store_dir / "records.log").write_bytes(frames)
        save_ledger(store_dir / "ledger.json", replica.ledger)


@cli.command()
@click.option("--viewer", required=True,
              help="x,y,heading,fov in grid meters and radians.")
@click.option("--viewport", "viewport_spec", default=None,
              help="WxH in screen units; defaults to the grid extent.")
@click.option("--field", "field_name", default=None,
              help="Numeric field to colormap; defaults to the first numeric field.")
@click.option("--range", "value_range_spec", default=None,
              help="lo,hi value range; defaults to the field's schema range.")
@click.option("-o", "--out", "out_path", type=click.Path(), default=None)
@click.pass_obj
def renderplan(opts, viewer, viewport_spec, field_name, value_range_spec, out_path):
    """Export wedge and HUD geometry for the current record set."""
    cfg = _resolve_config(opts)
    grid: GridSpec = cfg.require("grid")
    schema = _load_schema(cfg)
    device = _open_device(cfg)
    records = device.store.in_seq_order()
    freshness = {rid: state.name for rid, state in device.ledger.entries.items()}
    device.close()

    try:
        x, y, heading, fov = (float(v) for v in viewer.split(","))
    except ValueError:
        raise ConfigError(f"--viewer expects x,y,heading,fov, got {viewer!r}") from None
    pose = ViewerPose(position=(x, y), heading=heading, fov=fov)

    if viewport_spec:
        try:
            w, h = (float(v) for v in viewport_spec.lower().split("x"))
        except ValueError:
            raise ConfigError(f"--viewport expects WxH, got {viewport_spec!r}") from None
        viewport = Viewport(w, h)
    else:
        viewport = Viewport(grid.width_m, grid.height_m)

    numeric = [s for s in schema.fields if s.kind == "numeric"]
    if field_name is None:
        if not numeric:
            raise ConfigError("schema has no numeric field to colormap")
        spec = numeric[0]
    else:
        spec = schema.field_named(field_name)
    if value_range_spec:
        lo, hi = (float(v) for v in value_range_spec.split(","))
    elif spec.numeric_range is not None:
        lo, hi = spec.numeric_range
    else:
        observed = [float(r.values[spec.name]) for r in records if spec.name in r.values]
        if len(set(observed)) < 2:
            raise ConfigError(f"cannot infer a value range for {spec.name}; pass --range")
        lo, hi = min(observed), max(observed)

    plan = build_render_plan(records, grid, viewport, pose, spec.name, (lo, hi), freshness)
    payload = canonical_json(plan)
    if out_path:
        Path(out_path).write_bytes(payload + b"\n")
        click.echo(f"wrote {out_path}")
    else:
        click.echo(payload.decode("utf-8"))


_CONFIG_ERRORS = (
    ConfigError,
    errors.MalformedDocument,
    errors.InvalidSchema,
    errors.MissingField,
    errors.TypeMismatch,
    errors.OutOfRange,
    errors.BadCoordinate,
    errors.UnknownField,
    errors.InvalidRecord,
    errors.InvalidDeviceId,
    errors.MalformedScenario,
    errors.InvalidInterval,
    errors.NonNumericField,
    errors.MissingValue,
)


def main(argv=None) -> int:
    try:
        # in non-standalone mode click returns ctx.exit codes instead of raising
        result = cli.main(args=argv, standalone_mode=False)
        return result if isinstance(result, int) else 0
    except click.exceptions.Exit as exc:
        return exc.exit_code
    except click.UsageError as exc:
        click.echo(f"error: {exc.format_message()}", err=True)
        return 2
    except PeerUnreachable:
        click.echo("offline: data cached locally", err=True)
        return 3
    except _CONFIG_ERRORS as exc:
        click.echo(f"error: {exc}", err=True)
        return 2
    except click.Abort:
        return 130


if __name__ == "__main__":
    sys.exit(main())
