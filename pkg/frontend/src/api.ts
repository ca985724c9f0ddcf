// HTTP client for the tier-services API. The fetch implementation is
// injectable so tests can script fake services.

import type { RecordDoc, Schema, TierName } from "./types.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class OfflineError extends Error {
  constructor(peer: string) {
    super(`peer ${peer} unreachable`);
  }
}

export interface ServerValidationError {
  error: string;
  field: string | null;
}

export class ValidationRejected extends Error {
  constructor(public detail: ServerValidationError) {
    super(detail.error);
  }
}

export interface Healthz {
  tier: TierName;
  store_id: string;
  records: number;
  max_seq: number;
  schema: boolean;
}

export class ApiClient {
  constructor(
    public readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = (u, i) => fetch(u, i),
  ) {}

  private async request(path: string, init?: RequestInit): Promise<Response> {
    try {
      return await this.fetchImpl(this.baseUrl + path, init);
    } catch {
      throw new OfflineError(this.baseUrl);
    }
  }

  async healthz(): Promise<Healthz> {
    const resp = await this.request("/healthz");
    return (await resp.json()) as Healthz;
  }

  async schema(): Promise<Schema> {
    const resp = await this.request("/schema");
    if (!resp.ok) throw new Error(`no schema configured at ${this.baseUrl}`);
    return (await resp.json()) as Schema;
  }

  async records(after: number): Promise<{ records: RecordDoc[]; cursor: number }> {
    const resp = await this.request(`/records?after=${after}`);
    return (await resp.json()) as { records: RecordDoc[]; cursor: number };
  }

  async postRecords(records: RecordDoc[]): Promise<{
    accepted_ids: string[];
    known_ids: string[];
  }> {
    const resp = await this.request("/records", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ records }),
    });
    if (resp.status === 422) {
      throw new ValidationRejected((await resp.json()) as ServerValidationError);
    }
    if (!resp.ok) {
      throw new Error(`POST /records failed: ${resp.status}`);
    }
    return (await resp.json()) as { accepted_ids: string[]; known_ids: string[] };
  }

  async putBlob(digest: string, data: ArrayBuffer | Uint8Array): Promise<void> {
    const body = data instanceof Uint8Array
      ? data.slice().buffer as ArrayBuffer
      : data;
    await this.request(`/blobs/${digest}`, { method: "PUT", body });
  }
}
