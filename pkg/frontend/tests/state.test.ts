import { describe, expect, it } from "vitest";

import { TurnState } from "../src/state.js";

describe("TurnState", () => {
  it("allows exactly one pending request", () => {
    const state = new TurnState();
    expect(state.begin()).toBe(true);
    expect(state.begin()).toBe(false);  // already awaiting the agent
    state.resolve();
    expect(state.begin()).toBe(true);
  });

  it("freezes after close", () => {
    const state = new TurnState();
    state.close();
    expect(state.phase).toBe("closed");
    expect(state.begin()).toBe(false);
    state.resolve();  // no effect once closed
    expect(state.phase).toBe("closed");
  });

  it("walks awaiting-human -> awaiting-agent -> awaiting-human", () => {
    const state = new TurnState();
    expect(state.phase).toBe("awaiting-human");
    state.begin();
    expect(state.phase).toBe("awaiting-agent");
    state.resolve();
    expect(state.phase).toBe("awaiting-human");
  });
});
