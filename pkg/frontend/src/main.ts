// Browser entry point: wires the API client, console store, entry form,
// record list, and coverage overlay together. The peer URL and grid come
// from the query string (?peer=http://host:port) or the header controls.

import { ApiClient } from "./api.js";
import { ConsoleStore } from "./state.js";
import { renderEntryForm, type SubmitPayload } from "./form.js";
import { renderCoverageMap } from "./overlay.js";
import type { GridSpec, RecordDoc, Schema } from "./types.js";
import { FRESHNESS_COLOR } from "./types.js";

const POLL_INTERVAL_MS = 2000;

const DEFAULT_GRID: GridSpec = {
  origin_lat: 40.0,
  origin_lon: -105.0,
  cell_size_m: 10.0,
  rows: 5,
  cols: 5,
  target_per_cell: 3,
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

async function sha256Hex(data: ArrayBuffer): Promise<string> {
  const digest = await crypto.subtle.digest("SHA-256", data);
  return [...new Uint8Array(digest)].map((b) => b.toString(16).padStart(2, "0")).join("");
}

class App {
  private store = new ConsoleStore();
  private api: ApiClient | null = null;
  private schema: Schema | null = null;
  private grid = DEFAULT_GRID;
  private counter = -1;
  private deviceId = `console-${Math.random().toString(36).slice(2, 8)}`;

  async connect(peerUrl: string): Promise<void> {
    this.api = new ApiClient(peerUrl);
    await this.store.connect(this.api);
    this.schema = await this.api.schema();
    el<HTMLElement>("peer-tier").textContent = this.store.tier ?? "?";
    this.renderForm();
    this.render();
  }

  private nextId(): string {
    this.counter += 1;
    return `${this.deviceId}/${this.counter}`;
  }

  private async submit(payload: SubmitPayload): Promise<void> {
    if (!this.schema || !this.api) return;
    const values = { ...payload.values };
    const imageRefs: string[] = [];
    for (const [field, file] of payload.imageFiles) {
      const digest = await sha256Hex(await file.arrayBuffer());
      await this.api.putBlob(digest, await file.arrayBuffer());
      values[field] = digest;
      imageRefs.push(digest);
    }
    const doc: RecordDoc = {
      id: this.nextId(),
      schema_id: this.schema.schema_id,
      schema_version: this.schema.version,
      ts: new Date().toISOString().replace(/\.\d{3}Z$/, "Z"),
      lat: Number(el<HTMLInputElement>("lat").value),
      lon: Number(el<HTMLInputElement>("lon").value),
      author: el<HTMLInputElement>("author").value || this.deviceId,
      team: el<HTMLInputElement>("team").value || "field",
      source: "manual",
      values,
      image_refs: imageRefs,
    };
    await this.store.submit(doc);
    this.render();
  }

  private renderForm(): void {
    if (!this.schema) return;
    const host = el<HTMLElement>("form-host");
    host.replaceChildren(renderEntryForm(this.schema, (payload) => {
      void this.submit(payload);
    }));
  }

  render(): void {
    const snap = this.store.snapshot();
    el<HTMLElement>("offline-badge").hidden = !snap.offline;

    const list = el<HTMLElement>("record-list");
    list.replaceChildren();
    for (const record of [...snap.records].reverse()) {
      const item = document.createElement("li");
      const state = snap.freshness.get(record.id) ?? "UNSYNCED";
      const color = FRESHNESS_COLOR[state];
      const badge = document.createElement("span");
      badge.className = `badge badge-${color}`;
      badge.textContent = color;
      const text = document.createElement("span");
      const values = Object.entries(record.values)
        .map(([k, v]) => `${k}=${String(v)}`).join(" ");
      text.textContent = ` ${record.id}  ${record.ts}  ${values}`;
      item.append(badge, text);
      list.appendChild(item);
    }

    el<HTMLElement>("map-host").replaceChildren(
      renderCoverageMap(snap.records, this.grid, { freshness: snap.freshness }));
  }

  async pollLoop(): Promise<void> {
    await this.store.poll();
    this.render();
    setTimeout(() => void this.pollLoop(), POLL_INTERVAL_MS);
  }
}

const app = new App();
el<HTMLButtonElement>("connect").addEventListener("click", () => {
  const url = el<HTMLInputElement>("peer-url").value;
  void app.connect(url).then(() => void app.pollLoop());
});

const params = new URLSearchParams(location.search);
const peer = params.get("peer");
if (peer) {
  el<HTMLInputElement>("peer-url").value = peer;
  void app.connect(peer).then(() => void app.pollLoop());
}
