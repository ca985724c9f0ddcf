// Shared wire types: mirrors the Python package's JSON documents exactly.

export type FieldKind = "numeric" | "text" | "time" | "gps" | "image";

export interface FieldSpec {
  name: string;
  kind: FieldKind;
  unit?: string;
  required: boolean;
  numeric_range?: [number, number];
}

export interface Schema {
  schema_id: string;
  version: number;
  fields: FieldSpec[];
}

export interface RecordDoc {
  id: string;
  schema_id: string;
  schema_version: number;
  ts: string; // RFC 3339 UTC
  lat: number;
  lon: number;
  author: string;
  team: string;
  source: "manual" | "sensor" | "archival";
  values: Record<string, unknown>;
  image_refs: string[];
}

export interface GridSpec {
  origin_lat: number;
  origin_lon: number;
  cell_size_m: number;
  rows: number;
  cols: number;
  target_per_cell: number;
}

export type TierName = "edge" | "cloud";

// Replication acknowledgment level of a record as this console has observed
// it; only ever moves upward.
export type Freshness = "UNSYNCED" | "EDGE_CACHED" | "REMOTE";

export const FRESHNESS_ORDER: Record<Freshness, number> = {
  UNSYNCED: 0,
  EDGE_CACHED: 1,
  REMOTE: 2,
};

export const FRESHNESS_COLOR: Record<Freshness, string> = {
  UNSYNCED: "red",
  EDGE_CACHED: "green",
  REMOTE: "blue",
};

// Freshness implied by an acknowledgment from a peer of the given tier.
export function impliedFreshness(tier: TierName): Freshness {
  return tier === "edge" ? "EDGE_CACHED" : "REMOTE";
}

export function maxFreshness(a: Freshness, b: Freshness): Freshness {
  return FRESHNESS_ORDER[a] >= FRESHNESS_ORDER[b] ? a : b;
}
