// Coverage map: an abstract grid plane in grid-local meters. Cells shade by
// heatmap intensity, zero-count cells fill blue, and clicking a cell shows
// its history newest-first with shrinking markers and freshness badges.

import {
  cellHistory,
  coverage,
  heatmapBins,
  underSampledCells,
  type Cell,
} from "./analytics.js";
import type { Freshness, GridSpec, RecordDoc } from "./types.js";
import { FRESHNESS_COLOR } from "./types.js";

export interface OverlayOptions {
  onCellClick?: (cell: Cell, history: RecordDoc[]) => void;
  freshness?: Map<string, Freshness>;
  doc?: Document;
}

export function renderCoverageMap(
  records: RecordDoc[],
  grid: GridSpec,
  options: OverlayOptions = {},
): HTMLElement {
  const doc = options.doc ?? document;
  const counts = coverage(records, grid);
  const bins = heatmapBins(counts);
  const deficits = new Map(
    underSampledCells(counts, grid).map((d) => [`${d.row},${d.col}`, d.deficit]));

  const container = doc.createElement("div");
  container.className = "coverage-map";
  container.style.display = "grid";
  container.style.gridTemplateColumns = `repeat(${grid.cols}, 1fr)`;

  // render north-up: highest row index first
  for (let row = grid.rows - 1; row >= 0; row--) {
    for (let col = 0; col < grid.cols; col++) {
      const cell = doc.createElement("div");
      cell.className = "cell";
      cell.dataset.row = String(row);
      cell.dataset.col = String(col);
      const count = counts.counts[row]![col]!;
      const intensity = bins[row]![col]!;
      cell.dataset.count = String(count);
      cell.dataset.intensity = intensity.toFixed(4);
      if (count === 0) {
        cell.classList.add("missing"); // no data collected here yet
        cell.style.background = "rgb(41, 128, 185)";
      } else {
        cell.style.background = `rgba(230, 126, 34, ${0.15 + 0.85 * intensity})`;
      }
      const deficit = deficits.get(`${row},${col}`);
      if (deficit !== undefined && count > 0) {
        cell.classList.add("under-sampled");
        cell.dataset.deficit = String(deficit);
      }
      cell.addEventListener("click", () => {
        const history = cellHistory(records, { row, col }, grid);
        renderHistory(container, { row, col }, history, options, doc);
        options.onCellClick?.({ row, col }, history);
      });
      container.appendChild(cell);
    }
  }

  const history = doc.createElement("ol");
  history.className = "cell-history";
  container.appendChild(history);
  return container;
}

function renderHistory(
  container: HTMLElement,
  cell: Cell,
  history: RecordDoc[],
  options: OverlayOptions,
  doc: Document,
): void {
  const list = container.querySelector<HTMLElement>(".cell-history");
  if (!list) return;
  list.replaceChildren();
  list.dataset.cell = `${cell.row},${cell.col}`;
  history.forEach((record, rank) => {
    const item = doc.createElement("li");
    item.dataset.recordId = record.id;
    item.dataset.rank = String(rank);
    // the most recent measure renders largest; older points shrink under it
    item.style.fontSize = `${Math.max(0.55, 1.0 - 0.15 * rank)}em`;
    const state = options.freshness?.get(record.id);
    if (state) {
      const badge = doc.createElement("span");
      badge.className = `badge badge-${FRESHNESS_COLOR[state]}`;
      badge.textContent = FRESHNESS_COLOR[state];
      item.appendChild(badge);
    }
    const text = doc.createElement("span");
    text.textContent = ` ${record.id} @ ${record.ts}`;
    item.appendChild(text);
    list.appendChild(item);
  });
}
