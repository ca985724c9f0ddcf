// Schema-driven entry form: one control per field spec, in schema order,
// with inline validation identical in content to the server's 422s.

import { validateValues, type ValidationError } from "./validation.js";
import type { FieldSpec, Schema } from "./types.js";

export interface SubmitPayload {
  values: Record<string, unknown>;
  imageFiles: Map<string, File>; // image field name -> picked file
}

function control(spec: FieldSpec, doc: Document): HTMLElement {
  const wrap = doc.createElement("div");
  wrap.className = "field";
  wrap.dataset.kind = spec.kind;
  wrap.dataset.field = spec.name;

  const label = doc.createElement("label");
  label.textContent = spec.unit ? `${spec.name} (${spec.unit})` : spec.name;
  if (spec.required) {
    label.classList.add("required");
    label.textContent += " *";
  }
  wrap.appendChild(label);

  switch (spec.kind) {
    case "numeric": {
      const input = doc.createElement("input");
      input.type = "number";
      input.name = spec.name;
      input.step = "any";
      if (spec.numeric_range) {
        input.min = String(spec.numeric_range[0]);
        input.max = String(spec.numeric_range[1]);
        input.placeholder = `${spec.numeric_range[0]} to ${spec.numeric_range[1]}`;
      }
      if (spec.required) input.required = true;
      wrap.appendChild(input);
      break;
    }
    case "text": {
      const input = doc.createElement("input");
      input.type = "text";
      input.name = spec.name;
      if (spec.required) input.required = true;
      wrap.appendChild(input);
      break;
    }
    case "time": {
      const input = doc.createElement("input");
      input.type = "datetime-local";
      input.name = spec.name;
      input.value = new Date().toISOString().slice(0, 16); // defaults to now
      if (spec.required) input.required = true;
      wrap.appendChild(input);
      break;
    }
    case "gps": {
      const lat = doc.createElement("input");
      lat.type = "number";
      lat.step = "any";
      lat.name = `${spec.name}.lat`;
      lat.placeholder = "lat";
      const lon = doc.createElement("input");
      lon.type = "number";
      lon.step = "any";
      lon.name = `${spec.name}.lon`;
      lon.placeholder = "lon";
      const locate = doc.createElement("button");
      locate.type = "button";
      locate.textContent = "use current position";
      locate.addEventListener("click", () => {
        const geo = (wrap.ownerDocument.defaultView as Window | null)?.navigator?.geolocation;
        geo?.getCurrentPosition((pos) => {
          lat.value = String(pos.coords.latitude);
          lon.value = String(pos.coords.longitude);
        });
      });
      wrap.append(lat, lon, locate);
      break;
    }
    case "image": {
      const input = doc.createElement("input");
      input.type = "file";
      input.name = spec.name;
      input.accept = "image/*";
      if (spec.required) input.required = true;
      wrap.appendChild(input);
      break;
    }
  }

  const error = doc.createElement("span");
  error.className = "field-error";
  error.dataset.errorFor = spec.name;
  wrap.appendChild(error);
  return wrap;
}

/** Read candidate values out of the form; empty optional inputs are omitted. */
export function collectValues(form: HTMLFormElement, schema: Schema): SubmitPayload {
  const values: Record<string, unknown> = {};
  const imageFiles = new Map<string, File>();
  for (const spec of schema.fields) {
    if (spec.kind === "gps") {
      const lat = form.elements.namedItem(`${spec.name}.lat`) as HTMLInputElement;
      const lon = form.elements.namedItem(`${spec.name}.lon`) as HTMLInputElement;
      if (lat.value !== "" || lon.value !== "") {
        values[spec.name] = [Number(lat.value), Number(lon.value)];
      }
      continue;
    }
    const input = form.elements.namedItem(spec.name) as HTMLInputElement | null;
    if (!input || input.value === "") {
      if (spec.kind === "image" && input?.files?.length) {
        // some browsers keep value="" while files are populated
      } else {
        continue;
      }
    }
    switch (spec.kind) {
      case "numeric":
        values[spec.name] = input!.value === "" ? "" : Number(input!.value);
        break;
      case "text":
        values[spec.name] = input!.value;
        break;
      case "time": {
        // datetime-local lacks an offset; records are UTC on the wire
        const raw = input!.value;
        values[spec.name] = raw.length === 16 ? `${raw}:00Z` : raw;
        break;
      }
      case "image": {
        const file = input!.files?.[0];
        if (file) imageFiles.set(spec.name, file);
        break;
      }
    }
  }
  return { values, imageFiles };
}

export function showErrors(form: HTMLFormElement, errors: ValidationError[]): void {
  form.querySelectorAll<HTMLElement>(".field-error").forEach((el) => {
    el.textContent = "";
  });
  for (const error of errors) {
    const slot = form.querySelector<HTMLElement>(
      `[data-error-for="${error.anchor}"]`);
    if (slot) slot.textContent = error.message;
  }
}

/**
 * Build the entry form for a schema. On submit the values are validated
 * client-side; only a clean draft reaches `onSubmit` (and the network).
 */
export function renderEntryForm(
  schema: Schema,
  onSubmit: (payload: SubmitPayload) => void,
  doc: Document = document,
): HTMLFormElement {
  const form = doc.createElement("form");
  form.className = "entry-form";
  form.noValidate = true; // our validation mirrors the server's, use it
  for (const spec of schema.fields) {
    form.appendChild(control(spec, doc));
  }
  const submit = doc.createElement("button");
  submit.type = "submit";
  submit.textContent = "add record";
  form.appendChild(submit);

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const payload = collectValues(form, schema);
    const candidate = { ...payload.values };
    for (const name of payload.imageFiles.keys()) {
      delete candidate[name]; // hashed after upload, not validated as text
    }
    const errors = validateValues(schema, candidate);
    showErrors(form, errors);
    if (errors.length === 0) {
      onSubmit(payload);
    }
  });
  return form;
}
