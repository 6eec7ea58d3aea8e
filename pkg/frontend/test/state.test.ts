import { describe, expect, it } from "vitest";

import {
  applyEvent,
  applyProgress,
  endSetEnabled,
  initialState,
  parseEvent,
  replayEvents,
  trendSeries,
  SetFeedbackEvent,
  TILE_KEYS,
} from "../src/state.js";

const ev = (
  set_index: number,
  depth: "green" | "red" = "green",
  posture: "green" | "red" = "green",
  symmetry: "green" | "red" = "green",
): SetFeedbackEvent => ({ set_index, depth, posture, symmetry });

describe("dashboard state", () => {
  it("starts neutral with exactly three tiles", () => {
    const state = initialState();
    expect(Object.keys(state.tiles).sort()).toEqual(
      [...TILE_KEYS].sort(),
    );
    expect(Object.values(state.tiles)).toEqual(["neutral", "neutral", "neutral"]);
    expect(state.history).toHaveLength(0);
  });

  it("latest event drives the tiles", () => {
    let state = initialState();
    state = applyEvent(state, ev(1));
    state = applyEvent(state, ev(2, "red"));
    expect(state.tiles.depth).toBe("red");
    expect(state.tiles.posture).toBe("green");
    expect(state.history.map((e) => e.set_index)).toEqual([1, 2]);
  });

  it("is a pure fold: replay equals live application", () => {
    const events = [ev(1), ev(2, "red"), ev(3, "green", "red"), ev(4)];
    const live = events.reduce(applyEvent, initialState());
    const replayed = replayEvents(initialState(), events);
    expect(replayed).toEqual(live);
  });

  it("merges duplicate events idempotently", () => {
    const events = [ev(1), ev(2, "red")];
    let state = replayEvents(initialState(), events);
    const again = replayEvents(state, events);
    expect(again).toBe(state); // no change at all
    state = applyEvent(state, ev(2, "green"));
    expect(state.history).toHaveLength(2); // first write wins per set
    expect(state.tiles.depth).toBe("red");
  });

  it("keeps history append-only and ordered by set index", () => {
    let state = initialState();
    state = applyEvent(state, ev(3));
    const frozen = state.history;
    state = applyEvent(state, ev(1, "red"));
    expect(frozen).toHaveLength(1); // earlier snapshot untouched
    expect(state.history.map((e) => e.set_index)).toEqual([1, 3]);
    expect(state.tiles.depth).toBe("green"); // set 3 is still the latest
  });

  it("parses stream and feedback payload shapes", () => {
    expect(
      parseEvent({ set_index: 2, depth: "green", posture: "red", symmetry: "green" }),
    ).toEqual(ev(2, "green", "red", "green"));
    expect(
      parseEvent({
        set_index: 5,
        verdicts: { depth: "red", posture: "green", symmetry: "green" },
      }),
    ).toEqual(ev(5, "red"));
    expect(parseEvent({ complete: true })).toBeNull();
    expect(parseEvent({ set_index: 1, depth: "amber" })).toBeNull();
    expect(parseEvent(null)).toBeNull();
  });

  it("builds one trend series per metric", () => {
    const state = replayEvents(initialState(), [ev(1), ev(2, "red"), ev(3)]);
    const series = trendSeries(state);
    expect(series.depth.map((p) => p.verdict)).toEqual(["green", "red", "green"]);
    expect(series.posture).toHaveLength(3);
    expect(series.symmetry).toHaveLength(3);
  });

  it("gates the end-set control on the training segment", () => {
    let state = initialState();
    const progress = (segment: string, st = "between_sets") => ({
      sets_completed: 1,
      planned_total_sets: 18,
      segment_label: segment,
      set_in_segment: 1,
      state: st,
    });
    state = applyProgress(state, progress("baseline"));
    expect(endSetEnabled(state, true)).toBe(false);
    expect(endSetEnabled(state, false)).toBe(true);
    state = applyProgress(state, progress("training"));
    expect(endSetEnabled(state, true)).toBe(true);
    state = applyProgress(state, progress("training", "complete"));
    expect(endSetEnabled(state, true)).toBe(false);
  });
});
