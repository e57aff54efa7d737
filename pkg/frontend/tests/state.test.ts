import { describe, expect, it } from "vitest";

import {
  needsNoChangeConfirmation,
  newState,
  submissionBody,
  toggleMarker,
} from "../src/state.js";

describe("marker toggling", () => {
  it("adds then removes on the same index", () => {
    let state = newState("t1", 600);
    state = toggleMarker(state, 97);
    expect(state.markers).toEqual([97]);
    state = toggleMarker(state, 97);
    expect(state.markers).toEqual([]);
  });

  it("keeps markers unique and sorted", () => {
    let state = newState("t1", 600);
    for (const index of [300, 12, 45]) {
      state = toggleMarker(state, index);
    }
    expect(state.markers).toEqual([12, 45, 300]);
    state = toggleMarker(state, 12); // second toggle removes
    expect(state.markers).toEqual([45, 300]);
  });

  it("ignores out-of-bounds and fractional indices", () => {
    let state = newState("t1", 100);
    state = toggleMarker(state, 0);
    state = toggleMarker(state, 101);
    state = toggleMarker(state, 4.5);
    expect(state.markers).toEqual([]);
  });
});

describe("submission bodies", () => {
  it("serializes markers", () => {
    let state = newState("t9", 200);
    state = toggleMarker(state, 97);
    expect(submissionBody(state, false)).toEqual({ task_id: "t9", cps: [97] });
  });

  it("serializes the no-change flag", () => {
    const state = newState("t9", 200);
    expect(submissionBody(state, true)).toEqual({ task_id: "t9", no_change: true });
  });

  it("is identical on retry", () => {
    let state = newState("t9", 200);
    state = toggleMarker(state, 41);
    const first = submissionBody(state, false);
    const second = submissionBody(state, false);
    expect(second).toEqual(first);
  });

  it("fails without an open task", () => {
    expect(() => submissionBody(newState(null, 10), false)).toThrow();
  });
});

describe("no-change guard", () => {
  it("requires confirmation only when markers exist", () => {
    let state = newState("t1", 50);
    expect(needsNoChangeConfirmation(state)).toBe(false);
    state = toggleMarker(state, 10);
    expect(needsNoChangeConfirmation(state)).toBe(true);
  });
});
