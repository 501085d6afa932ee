import { beforeEach, describe, expect, test } from "vitest";

import { ModeStore } from "../src/mode.js";

beforeEach(() => {
  localStorage.clear();
});

describe("ModeStore", () => {
  test("defaults to guided", () => {
    expect(new ModeStore().mode).toBe("guided");
  });

  test("persists the choice for the next page load", () => {
    new ModeStore().set("expert");
    expect(new ModeStore().mode).toBe("expert");
  });

  test("ignores garbage in storage", () => {
    localStorage.setItem("shadowopt.ui_mode", "root");
    expect(new ModeStore().mode).toBe("guided");
  });

  test("toggle flips and notifies listeners", () => {
    const store = new ModeStore();
    const seen: string[] = [];
    store.onChange((mode) => seen.push(mode));
    expect(store.toggle()).toBe("expert");
    expect(store.toggle()).toBe("guided");
    expect(seen).toEqual(["expert", "guided"]);
  });

  test("setting the current mode again does not notify", () => {
    const store = new ModeStore();
    const seen: string[] = [];
    store.onChange((mode) => seen.push(mode));
    store.set("guided");
    expect(seen).toEqual([]);
  });
});
