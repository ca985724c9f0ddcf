// Grid analytics mirroring the CLI's --json output: the console never
// computes coverage, missing cells, or history differently from the
// server-side tooling (enforced by fixture tests against the CLI).

import type { GridSpec, RecordDoc } from "./types.js";

const METERS_PER_DEGREE = 111320.0;

export interface Cell {
  row: number;
  col: number;
}

export interface CellCounts {
  counts: number[][];
  out_of_bounds: number;
}

export function localProject(lat: number, lon: number, grid: GridSpec): [number, number] {
  const x = (lon - grid.origin_lon) * METERS_PER_DEGREE *
    Math.cos((grid.origin_lat * Math.PI) / 180);
  const y = (lat - grid.origin_lat) * METERS_PER_DEGREE;
  return [x, y];
}

export function cellOf(record: RecordDoc, grid: GridSpec): Cell | null {
  const [x, y] = localProject(record.lat, record.lon, grid);
  if (x < 0 || y < 0) return null;
  const col = Math.floor(x / grid.cell_size_m);
  const row = Math.floor(y / grid.cell_size_m);
  if (row >= grid.rows || col >= grid.cols) return null;
  return { row, col };
}

export function coverage(records: Iterable<RecordDoc>, grid: GridSpec): CellCounts {
  const counts = Array.from({ length: grid.rows }, () => new Array<number>(grid.cols).fill(0));
  let outside = 0;
  for (const record of records) {
    const cell = cellOf(record, grid);
    if (cell === null) {
      outside += 1;
    } else {
      counts[cell.row]![cell.col]! += 1;
    }
  }
  return { counts, out_of_bounds: outside };
}

export function missingCells(counts: CellCounts): Cell[] {
  const out: Cell[] = [];
  counts.counts.forEach((rowCounts, row) => {
    rowCounts.forEach((count, col) => {
      if (count === 0) out.push({ row, col });
    });
  });
  return out;
}

export function underSampledCells(counts: CellCounts, grid: GridSpec):
    Array<Cell & { deficit: number }> {
  const out: Array<Cell & { deficit: number }> = [];
  counts.counts.forEach((rowCounts, row) => {
    rowCounts.forEach((count, col) => {
      const deficit = grid.target_per_cell - count;
      if (deficit > 0) out.push({ row, col, deficit });
    });
  });
  return out;
}

/** The exact document `fieldsync coverage --json` prints. */
export function coverageDoc(records: RecordDoc[], grid: GridSpec): {
  counts: number[][];
  out_of_bounds: number;
  missing: Cell[];
  under_sampled: Array<Cell & { deficit: number }>;
} {
  const counts = coverage(records, grid);
  return {
    counts: counts.counts,
    out_of_bounds: counts.out_of_bounds,
    missing: missingCells(counts),
    under_sampled: underSampledCells(counts, grid),
  };
}

/**
 * Records in one cell, newest first; timestamp ties break by canonical id
 * ascending (same rule as the server), so the head is the current value and
 * later entries carry decreasing rendering rank.
 */
export function cellHistory(records: RecordDoc[], cell: Cell, grid: GridSpec): RecordDoc[] {
  const members = records.filter((r) => {
    const own = cellOf(r, grid);
    return own !== null && own.row === cell.row && own.col === cell.col;
  });
  members.sort((a, b) => {
    const ta = Date.parse(a.ts);
    const tb = Date.parse(b.ts);
    if (ta !== tb) return tb - ta;
    return a.id < b.id ? -1 : a.id > b.id ? 1 : 0;
  });
  return members;
}

export function heatmapBins(counts: CellCounts): number[][] {
  let peak = 0;
  for (const row of counts.counts) {
    for (const v of row) peak = Math.max(peak, v);
  }
  if (peak === 0) {
    return counts.counts.map((row) => row.map(() => 0));
  }
  return counts.counts.map((row) => row.map((v) => v / peak));
}
