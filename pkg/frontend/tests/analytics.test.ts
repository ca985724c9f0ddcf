// The console never computes analytics divergently: these fixtures are the
// CLI's own --json output for the same record set.

import { describe, expect, it } from "vitest";

import {
  cellHistory,
  coverage,
  coverageDoc,
  heatmapBins,
} from "../src/analytics.js";
import type { GridSpec, RecordDoc } from "../src/types.js";
import gridDoc from "../fixtures/grid.json";
import recordsDoc from "../fixtures/records.json";
import coverageFixture from "../fixtures/coverage.json";
import historiesFixture from "../fixtures/histories.json";

const grid = gridDoc as GridSpec;
const records = recordsDoc as RecordDoc[];

describe("coverage parity with the CLI", () => {
  it("matches coverage --json exactly", () => {
    expect(coverageDoc(records, grid)).toEqual(coverageFixture);
  });

  it("conserves the record count", () => {
    const counts = coverage(records, grid);
    const binned = counts.counts.flat().reduce((a, b) => a + b, 0);
    expect(binned + counts.out_of_bounds).toBe(records.length);
  });
});

describe("cell history parity", () => {
  it("matches every non-empty cell, including the id tie-break", () => {
    const expected = historiesFixture as Record<string, string[]>;
    for (const [key, ids] of Object.entries(expected)) {
      const [row, col] = key.split(",").map(Number);
      const got = cellHistory(records, { row: row!, col: col! }, grid)
        .map((r) => r.id);
      expect(got, `cell ${key}`).toEqual(ids);
    }
  });

  it("orders a timestamp tie by canonical id ascending", () => {
    // fixture cell (0,0) holds alpha/2 and beta/0 at the same instant
    const ids = cellHistory(records, { row: 0, col: 0 }, grid).map((r) => r.id);
    expect(ids.indexOf("alpha/2")).toBeLessThan(ids.indexOf("beta/0"));
    expect(ids[0]).toBe("alpha/2");
  });

  it("returns empty for untouched cells", () => {
    expect(cellHistory(records, { row: 2, col: 2 }, grid)).toEqual([]);
  });
});

describe("heatmap bins", () => {
  it("normalizes by the peak cell", () => {
    const counts = coverage(records, grid);
    const bins = heatmapBins(counts);
    const flat = bins.flat();
    expect(Math.max(...flat)).toBe(1.0);
    for (const v of flat) {
      expect(v).toBeGreaterThanOrEqual(0);
      expect(v).toBeLessThanOrEqual(1);
    }
  });

  it("keeps an empty grid all zeros", () => {
    const bins = heatmapBins(coverage([], grid));
    expect(bins.flat().every((v) => v === 0)).toBe(true);
  });
});
