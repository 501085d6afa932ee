// Shared test fixtures: a small capability descriptor mirroring the server's
// field shapes, plus an in-memory transport for driving ApiClient offline.

import type { Transport } from "../src/api.js";
import type { CapabilityDescriptor, CapabilityField } from "../src/types.js";

export function field(partial: Partial<CapabilityField> & { name: string }): CapabilityField {
  return {
    group: "misc",
    type: "number",
    default: null,
    bounds: null,
    expert_only: false,
    explanation_key: `field.test.${partial.name}`,
    ...partial,
  };
}

export const DESCRIPTOR: CapabilityDescriptor = {
  steps: {
    dataset: [
      field({ name: "name", type: "string", group: "dataset", default: "" }),
      field({ name: "time_from", type: "timestamp", group: "dataset" }),
      field({ name: "time_to", type: "timestamp", group: "dataset" }),
      field({ name: "tag_equals", type: "tags", group: "dataset", default: {} }),
      field({ name: "pad_length", type: "integer", group: "dataset", bounds: [1, 20000], expert_only: true }),
      field({ name: "override", type: "boolean", group: "dataset", default: false, expert_only: true }),
    ],
    training: [
      field({ name: "init", type: "choice", group: "training", default: "scratch", bounds: ["scratch", "finetune", "as_is"] }),
      field({ name: "base_id", type: "string", group: "training" }),
      field({ name: "learning_rate", group: "train_hyperparams", default: 0.003, bounds: [0, 1] }),
      field({ name: "epochs", type: "integer", group: "train_hyperparams", default: 200, bounds: [0, 20000] }),
      field({ name: "dropout_rate", group: "train_hyperparams", default: 0.1, bounds: [0, 0.99], expert_only: true }),
      field({ name: "hidden_layers", type: "integer_list", group: "train_hyperparams", default: [64, 64], bounds: [1, 1024], expert_only: true }),
      field({ name: "seed", type: "integer", group: "train_hyperparams", default: 0, expert_only: true }),
    ],
    optimization: [
      field({ name: "x_init", type: "tags", group: "optimization", expert_only: true }),
      field({ name: "step_size", group: "optimizer_hyperparams", default: 0.05, bounds: [0, 10], expert_only: true }),
      field({ name: "iterations", type: "integer", group: "optimizer_hyperparams", default: 100, bounds: [1, 10000], expert_only: true }),
      field({ name: "cycle_time_enabled", type: "boolean", group: "objective_spec", default: true }),
      field({ name: "cycle_time_weight", group: "objective_spec", default: 1.0, bounds: [0, 1000], expert_only: true }),
      field({ name: "force_threshold", group: "objective_spec", default: 25.0, bounds: [0.1, 1000] }),
    ],
  },
  heads: ["peak_force", "cycle_time", "success_logit"],
  verdicts: [
    "good_training_run",
    "overfitting",
    "underfitting",
    "too_much_regularization",
    "erroneous_training_data",
  ],
};

export interface StubCall {
  method: string;
  url: string;
  body: unknown;
}

export interface StubRoute {
  status?: number;
  doc: unknown | ((call: StubCall) => unknown);
}

/** Transport that answers from a `"METHOD path"` route table. */
export function stubTransport(routes: Record<string, StubRoute>): { transport: Transport; calls: StubCall[] } {
  const calls: StubCall[] = [];
  const transport: Transport = (method, url, body) => {
    const call: StubCall = { method, url, body: body ? JSON.parse(body) : null };
    calls.push(call);
    const path = url.replace(/^https?:\/\/[^/]+/, "").split("?")[0];
    const route = routes[`${method} ${path}`];
    if (!route) {
      return Promise.resolve({
        status: 404,
        text: JSON.stringify({
          error: { code: "not_found", key: "route.missing", message: `${method} ${path}`, field_path: null },
        }),
      });
    }
    const doc = typeof route.doc === "function" ? (route.doc as (c: StubCall) => unknown)(call) : route.doc;
    return Promise.resolve({ status: route.status ?? 200, text: JSON.stringify(doc) });
  };
  return { transport, calls };
}
