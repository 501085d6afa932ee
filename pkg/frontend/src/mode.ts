// Guided/Expert mode, persisted per browser. Toggling re-renders visibility
// only; form values are owned by FormController and survive any number of
// toggles untouched.

import type { UiMode } from "./types.js";

const STORAGE_KEY = "shadowopt.ui_mode";

type Listener = (mode: UiMode) => void;

export class ModeStore {
  private listeners: Listener[] = [];
  private current: UiMode;

  constructor(initial?: UiMode) {
    this.current = initial ?? this.load();
  }

  private load(): UiMode {
    try {
      const stored = globalThis.localStorage?.getItem(STORAGE_KEY);
      return stored === "expert" ? "expert" : "guided";
    } catch {
      return "guided";
    }
  }

  get mode(): UiMode {
    return this.current;
  }

  set(mode: UiMode): void {
    if (mode === this.current) return;
    this.current = mode;
    try {
      globalThis.localStorage?.setItem(STORAGE_KEY, mode);
    } catch {
      // storage unavailable: mode still works for the page lifetime
    }
    for (const listener of this.listeners) listener(mode);
  }

  toggle(): UiMode {
    this.set(this.current === "guided" ? "expert" : "guided");
    return this.current;
  }

  onChange(listener: Listener): void {
    this.listeners.push(listener);
  }
}
