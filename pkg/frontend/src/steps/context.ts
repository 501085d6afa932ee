// Shared wiring handed to every step view.

import type { ApiClient } from "../api.js";
import type { ModeStore } from "../mode.js";
import type { Workflow } from "../workflow.js";
import type { CapabilityDescriptor, ErrorEnvelope, ProgramDoc } from "../types.js";
import { ApiError } from "../api.js";
import { clear, el } from "../util.js";

export interface StepContext {
  api: ApiClient;
  modeStore: ModeStore;
  descriptor: CapabilityDescriptor;
  program: ProgramDoc;
  workflow: Workflow;
  /** Called whenever a step's advance-readiness may have changed. */
  onStateChange: () => void;
}

export interface StepView {
  readonly element: HTMLElement;
  /** Fetch persisted state and render; called on every (re-)entry. */
  load(): Promise<void>;
  canAdvance(): boolean;
  /** Message shown next to a disabled Next button, if any. */
  blockedReason(): string | null;
}

export function errorBanner(host: HTMLElement): (error: unknown) => void {
  const banner = el("div", { class: "error-banner hidden", role: "alert" });
  host.append(banner);
  return (error: unknown) => {
    clear(banner);
    if (error === null) {
      banner.classList.add("hidden");
      return;
    }
    const envelope: ErrorEnvelope =
      error instanceof ApiError
        ? error.envelope
        : { code: "internal_error", key: "ui.unexpected", message: String(error), field_path: null };
    banner.classList.remove("hidden");
    banner.append(
      el("strong", { text: envelope.key }),
      el("span", { text: ` ${envelope.message}` }),
    );
  };
}
