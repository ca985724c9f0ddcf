"""Stratified-sampling grid analytics.

Records are binned onto a local planar grid (equirectangular projection,
adequate for fieldsites up to 20 km per side). Coverage, missing-cell,
quota-deficit, per-cell history, and robust-z anomaly computations are all
pure functions over immutable record snapshots; cells are half-open and all
orderings row-major, so results are deterministic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from statistics import median
from typing import Iterable, Sequence

from .errors import NonNumericField, UnknownField
from .model import Record, RecordId

METERS_PER_DEGREE = 111320.0
MAD_CONSISTENCY = 1.4826  # scales MAD to the stddev of a normal distribution
MAX_EXTENT_M = 20_000.0


@dataclass(frozen=True)
class GridSpec:
    """Collection grid: southwest origin, square cells, per-cell quota."""

    origin_lat: float
    origin_lon: float
    cell_size_m: float
    rows: int
    cols: int
    target_per_cell: int = 1

    def __post_init__(self):
        if self.cell_size_m <= 0:
            raise ValueError("cell_size_m must be positive")
        if self.rows < 1 or self.cols < 1:
            raise ValueError("grid needs at least one row and column")
        if self.target_per_cell < 1:
            raise ValueError("target_per_cell must be >= 1")
        if (self.rows * self.cell_size_m > MAX_EXTENT_M
                or self.cols * self.cell_size_m > MAX_EXTENT_M):
            raise ValueError("grid extent exceeds the planar projection bound (20 km)")

    @property
    def width_m(self) -> float:
        return self.cols * self.cell_size_m

    @property
    def height_m(self) -> float:
        return self.rows * self.cell_size_m

    def to_doc(self) -> dict:
        return {
            "origin_lat": self.origin_lat,
            "origin_lon": self.origin_lon,
            "cell_size_m": self.cell_size_m,
            "rows": self.rows,
            "cols": self.cols,
            "target_per_cell": self.target_per_cell,
        }

    @classmethod
    def from_doc(cls, doc: dict) -> "GridSpec":
        return cls(
            origin_lat=float(doc["origin_lat"]),
            origin_lon=float(doc["origin_lon"]),
            cell_size_m=float(doc["cell_size_m"]),
            rows=int(doc["rows"]),
            cols=int(doc["cols"]),
            target_per_cell=int(doc.get("target_per_cell", 1)),
        )


@dataclass(frozen=True, order=True)
class CellIndex:
    row: int
    col: int


@dataclass
class CellCounts:
    """Per-cell occupancy plus the count of records outside the grid."""

    counts: list[list[int]]
    out_of_bounds: int = 0

    @property
    def rows(self) -> int:
        return len(self.counts)

    @property
    def cols(self) -> int:
        return len(self.counts[0]) if self.counts else 0

    def total(self) -> int:
        return sum(sum(row) for row in self.counts) + self.out_of_bounds


@dataclass(frozen=True)
class AnomalyParams:
    """Robust z-score flagging over a Moore-radius-1 cell neighborhood."""

    field: str
    z_threshold: float = 3.0

    def __post_init__(self):
        if self.z_threshold <= 0:
            raise ValueError("z_threshold must be positive")


def local_project(lat: float, lon: float, grid: GridSpec) -> tuple[float, float]:
    """Planar meters east/north of the grid origin (equirectangular)."""
    x = (lon - grid.origin_lon) * METERS_PER_DEGREE * math.cos(math.radians(grid.origin_lat))
    y = (lat - grid.origin_lat) * METERS_PER_DEGREE
    return x, y


def local_unproject(x_m: float, y_m: float, grid: GridSpec) -> tuple[float, float]:
    """Inverse of local_project; meters back to (lat, lon)."""
    lat = grid.origin_lat + y_m / METERS_PER_DEGREE
    lon = grid.origin_lon + x_m / (METERS_PER_DEGREE * math.cos(math.radians(grid.origin_lat)))
    return lat, lon


def cell_of_point(x_m: float, y_m: float, grid: GridSpec) -> CellIndex | None:
    """Half-open cell containing a planar point, or None when outside."""
    if x_m < 0 or y_m < 0:
        return None
    col = math.floor(x_m / grid.cell_size_m)
    row = math.floor(y_m / grid.cell_size_m)
    if row >= grid.rows or col >= grid.cols:
        return None
    return CellIndex(row=row, col=col)


def cell_of(record: Record, grid: GridSpec) -> CellIndex | None:
    x, y = local_project(record.lat, record.lon, grid)
    return cell_of_point(x, y, grid)


def coverage(records: Iterable[Record], grid: GridSpec) -> CellCounts:
    """Per-cell record counts; binned + out_of_bounds equals the input size."""
    counts = [[0] * grid.cols for _ in range(grid.rows)]
    outside = 0
    for record in records:
        cell = cell_of(record, grid)
        if cell is None:
            outside += 1
        else:
            counts[cell.row][cell.col] += 1
    return CellCounts(counts=counts, out_of_bounds=outside)


def missing_cells(counts: CellCounts) -> list[CellIndex]:
    """Cells with zero records, row-major."""
    return [
        CellIndex(r, c)
        for r in range(counts.rows)
        for c in range(counts.cols)
        if counts.counts[r][c] == 0
    ]


def under_sampled_cells(counts: CellCounts, grid: GridSpec) -> list[tuple[CellIndex, int]]:
    """Cells short of the stratified-sampling quota, with their deficit."""
    out = []
    for r in range(counts.rows):
        for c in range(counts.cols):
            deficit = grid.target_per_cell - counts.counts[r][c]
            if deficit > 0:
                out.append((CellIndex(r, c), deficit))
    return out


def cell_history(records: Iterable[Record], cell: CellIndex, grid: GridSpec) -> list[Record]:
    """Records in one cell, newest first; the head is the current value.

    Equal timestamps are broken by canonical record id ascending so the
    rendering rank is deterministic.
    """
    members = [r for r in records if cell_of(r, grid) == cell]
    members.sort(key=lambda r: str(r.id))
    members.sort(key=lambda r: r.timestamp, reverse=True)
    return members


def heatmap_bins(counts: CellCounts) -> list[list[float]]:
    """Counts normalized to [0, 1] by the maximum cell; all zeros stay zero."""
    peak = max((v for row in counts.counts for v in row), default=0)
    if peak == 0:
        return [[0.0] * counts.cols for _ in range(counts.rows)]
    return [[v / peak for v in row] for row in counts.counts]


def _neighborhood(cell: CellIndex, grid: GridSpec) -> list[CellIndex]:
    cells = []
    for dr in (-1, 0, 1):
        for dc in (-1, 0, 1):
            r, c = cell.row + dr, cell.col + dc
            if 0 <= r < grid.rows and 0 <= c < grid.cols:
                cells.append(CellIndex(r, c))
    return cells


def detect_anomalies(
    records: Sequence[Record],
    grid: GridSpec,
    params: AnomalyParams,
) -> list[tuple[RecordId, float]]:
    """Flag records whose value deviates robustly from their neighborhood.

    For each record, the reference population is every value of
    ``params.field`` in the record's cell and its 8 Moore neighbors. The
    statistic is |v - median| / (1.4826 * MAD); when the MAD degenerates to
    zero the mean absolute deviation substitutes, and when that is zero too
    the neighborhood is uniform and nothing in it is flagged. Results are
    ordered by canonical record id.
    """
    placed: list[tuple[Record, CellIndex, float]] = []
    carriers = 0
    for record in records:
        if params.field not in record.values:
            continue
        carriers += 1
        value = record.values[params.field]
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise NonNumericField(params.field)
        cell = cell_of(record, grid)
        if cell is None:
            continue  # off-grid records have no neighborhood
        placed.append((record, cell, float(value)))
    if records and carriers == 0:
        raise UnknownField(params.field)

    by_cell: dict[CellIndex, list[float]] = {}
    for _, cell, value in placed:
        by_cell.setdefault(cell, []).append(value)

    flagged: list[tuple[RecordId, float]] = []
    for record, cell, value in placed:
        pool: list[float] = []
        for neighbor in _neighborhood(cell, grid):
            pool.extend(by_cell.get(neighbor, ()))
        med = median(pool)
        mad = median([abs(v - med) for v in pool])
        if mad == 0:
            mad = sum(abs(v - med) for v in pool) / len(pool)
            if mad == 0:
                continue  # uniform neighborhood, nothing to flag
        z = abs(value - med) / (MAD_CONSISTENCY * mad)
        if z > params.z_threshold:
            flagged.append((record.id, z))
    flagged.sort(key=lambda pair: str(pair[0]))
    return flagged
