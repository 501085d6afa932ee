// Descriptor-driven forms. Fields come from /capabilities, so Guided vs
// Expert visibility always matches the server's expert_only marking: the
// submission for a mode is assembled from the descriptor, never from a
// hard-coded field list. Hidden fields keep their DOM inputs and values, so
// toggling the mode is lossless by construction.

import type { CapabilityField, UiMode } from "./types.js";
import { el, parseTagPairs } from "./util.js";

export type FieldValue = string | number | boolean | number[] | Record<string, string> | null;

function inputFor(field: CapabilityField): HTMLElement {
  switch (field.type) {
    case "boolean": {
      const box = el("input", { type: "checkbox", "data-field": field.name });
      (box as HTMLInputElement).checked = field.default === true;
      return box;
    }
    case "choice": {
      const select = el("select", { "data-field": field.name });
      for (const option of (field.bounds as string[]) ?? []) {
        select.append(el("option", { value: option, text: option }));
      }
      if (typeof field.default === "string") (select as HTMLSelectElement).value = field.default;
      return select;
    }
    case "number":
    case "integer": {
      const input = el("input", { type: "number", "data-field": field.name });
      if (Array.isArray(field.bounds) && typeof field.bounds[0] === "number") {
        input.setAttribute("min", String(field.bounds[0]));
        input.setAttribute("max", String(field.bounds[1]));
      }
      if (field.type === "integer") input.setAttribute("step", "1");
      if (field.default !== null && field.default !== undefined) {
        (input as HTMLInputElement).value = String(field.default);
      }
      return input;
    }
    case "integer_list": {
      const input = el("input", { type: "text", "data-field": field.name });
      if (Array.isArray(field.default)) {
        (input as HTMLInputElement).value = field.default.join(", ");
      }
      return input;
    }
    default: {
      // string, timestamp, tags: free text; tags parse as k=v pairs
      const input = el("input", { type: "text", "data-field": field.name });
      if (typeof field.default === "string") (input as HTMLInputElement).value = field.default;
      return input;
    }
  }
}

export class FormController {
  readonly element: HTMLElement;
  private rows = new Map<string, HTMLElement>();
  private inputs = new Map<string, HTMLElement>();
  private fieldsByName = new Map<string, CapabilityField>();

  constructor(
    readonly fields: CapabilityField[],
    mode: UiMode,
  ) {
    this.element = el("div", { class: "form" });
    for (const field of fields) {
      this.fieldsByName.set(field.name, field);
      const input = inputFor(field);
      const row = el("label", { class: "form-row", "data-row": field.name }, [
        el("span", { class: "form-label", text: field.name.replace(/_/g, " ") }),
        input,
      ]);
      row.title = field.explanation_key;
      if (field.expert_only) row.classList.add("expert-only");
      this.rows.set(field.name, row);
      this.inputs.set(field.name, input);
      this.element.append(row);
    }
    this.setMode(mode);
  }

  /** Visibility only; inputs stay mounted so entered values survive. */
  setMode(mode: UiMode): void {
    for (const [name, row] of this.rows) {
      const field = this.fieldsByName.get(name)!;
      row.classList.toggle("hidden", mode === "guided" && field.expert_only);
    }
  }

  visibleFieldNames(mode: UiMode): string[] {
    return this.fields.filter((f) => mode === "expert" || !f.expert_only).map((f) => f.name);
  }

  input(name: string): HTMLInputElement | HTMLSelectElement {
    const node = this.inputs.get(name);
    if (!node) throw new Error(`no field '${name}'`);
    return node as HTMLInputElement | HTMLSelectElement;
  }

  setValue(name: string, value: FieldValue): void {
    const field = this.fieldsByName.get(name);
    const input = this.input(name);
    if (!field) throw new Error(`no field '${name}'`);
    if (field.type === "boolean") {
      (input as HTMLInputElement).checked = value === true;
    } else if (Array.isArray(value)) {
      (input as HTMLInputElement).value = value.join(", ");
    } else if (field.type === "tags" && value !== null && typeof value === "object") {
      (input as HTMLInputElement).value = Object.entries(value)
        .map(([k, v]) => `${k}=${v}`)
        .join(", ");
    } else {
      (input as HTMLInputElement).value = value === null ? "" : String(value);
    }
  }

  /** Parsed current value, or null when the input is empty. */
  value(name: string): FieldValue {
    const field = this.fieldsByName.get(name);
    if (!field) throw new Error(`no field '${name}'`);
    const input = this.input(name);
    if (field.type === "boolean") return (input as HTMLInputElement).checked;
    const raw = (input as HTMLInputElement).value.trim();
    if (raw === "") return null;
    if (field.type === "number") return Number(raw);
    if (field.type === "integer") return Math.round(Number(raw));
    if (field.type === "tags") return parseTagPairs(raw);
    if (field.type === "integer_list") {
      return raw
        .split(",")
        .map((part) => Math.round(Number(part.trim())))
        .filter((n) => Number.isFinite(n));
    }
    return raw;
  }

  /**
   * Values to submit in the given mode, keyed by field name. Expert-only
   * fields are absent entirely in Guided mode (the server applies its own
   * defaults); empty inputs are absent in both modes.
   */
  submission(mode: UiMode): Record<string, FieldValue> {
    const out: Record<string, FieldValue> = {};
    for (const field of this.fields) {
      if (mode === "guided" && field.expert_only) continue;
      const value = this.value(field.name);
      if (value === null) continue;
      if (field.type === "tags" && Object.keys(value as object).length === 0) continue;
      out[field.name] = value;
    }
    return out;
  }

  /** Submission values restricted to one descriptor group. */
  groupSubmission(mode: UiMode, group: string): Record<string, FieldValue> {
    const all = this.submission(mode);
    const out: Record<string, FieldValue> = {};
    for (const field of this.fields) {
      if (field.group === group && field.name in all) out[field.name] = all[field.name];
    }
    return out;
  }
}
