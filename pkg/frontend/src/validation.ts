// Client-side record validation mirroring the server, message for message.
// A draft that passes here will not bounce with a 422; a draft that fails
// shows the exact text the server would have returned, without a network
// round trip.

import { pyFloat, pyRepr } from "./pyformat.js";
import type { FieldSpec, Schema } from "./types.js";

export interface ValidationError {
  field: string; // what the server names in its 422 ("lat"/"lon" for gps bounds)
  anchor: string; // the form field the message belongs under
  message: string;
}

const HEX_DIGEST = /^[0-9a-f]{64}$/;
// RFC 3339 instant with an explicit offset or Z
const RFC3339 = /^\d{4}-\d{2}-\d{2}[Tt ]\d{2}:\d{2}:\d{2}(\.\d+)?([Zz]|[+-]\d{2}:\d{2})$/;

function mismatch(field: string, expected: string): ValidationError {
  return { field, anchor: field, message: `field ${pyRepr(field)} expects ${expected}` };
}

function checkValue(spec: FieldSpec, value: unknown): ValidationError | null {
  switch (spec.kind) {
    case "numeric": {
      if (typeof value !== "number" || typeof value === "boolean") {
        return mismatch(spec.name, "numeric");
      }
      if (!Number.isFinite(value)) {
        return mismatch(spec.name, "finite numeric");
      }
      if (spec.numeric_range) {
        const [lo, hi] = spec.numeric_range;
        if (value < lo || value > hi) {
          return {
            field: spec.name,
            anchor: spec.name,
            message: `field ${pyRepr(spec.name)} value ${pyFloat(value)} ` +
              `outside range [${pyFloat(lo)}, ${pyFloat(hi)}]`,
          };
        }
      }
      return null;
    }
    case "text":
      return typeof value === "string" ? null : mismatch(spec.name, "text");
    case "time": {
      if (typeof value !== "string" || !RFC3339.test(value) ||
          Number.isNaN(Date.parse(value))) {
        return mismatch(spec.name, "time (RFC 3339)");
      }
      return null;
    }
    case "gps": {
      if (!Array.isArray(value) || value.length !== 2 ||
          typeof value[0] !== "number" || typeof value[1] !== "number") {
        return mismatch(spec.name, "gps [lat, lon]");
      }
      const [lat, lon] = value as [number, number];
      if (!Number.isFinite(lat) || lat < -90 || lat > 90) {
        return { field: "lat", anchor: spec.name, message: `bad coordinate lat=${pyFloat(lat)}` };
      }
      if (!Number.isFinite(lon) || lon < -180 || lon > 180) {
        return { field: "lon", anchor: spec.name, message: `bad coordinate lon=${pyFloat(lon)}` };
      }
      return null;
    }
    case "image": {
      if (typeof value !== "string" || !HEX_DIGEST.test(value)) {
        return mismatch(spec.name, "image (64-char hex content hash)");
      }
      return null;
    }
  }
}

/** Validate candidate values against a schema; empty result means valid. */
export function validateValues(
  schema: Schema,
  values: Record<string, unknown>,
): ValidationError[] {
  const errors: ValidationError[] = [];
  const known = new Set(schema.fields.map((f) => f.name));
  for (const name of Object.keys(values)) {
    if (!known.has(name)) {
      errors.push({ field: name, anchor: name, message: `unknown field ${pyRepr(name)}` });
    }
  }
  for (const spec of schema.fields) {
    if (!(spec.name in values)) {
      if (spec.required) {
        errors.push({
          field: spec.name,
          anchor: spec.name,
          message: `missing required field ${pyRepr(spec.name)}`,
        });
      }
      continue;
    }
    const error = checkValue(spec, values[spec.name]);
    if (error) {
      errors.push(error);
    }
  }
  return errors;
}
