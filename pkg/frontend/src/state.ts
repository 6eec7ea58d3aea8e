// Pure dashboard state: a fold over the service's feedback event log.
// Re-rendering from replayed events must equal live-rendered state, so
// nothing here depends on arrival timing, and history is append-only.

export type Verdict = "green" | "red";
export type Tile = Verdict | "neutral";

export interface SetFeedbackEvent {
  set_index: number;
  depth: Verdict;
  posture: Verdict;
  symmetry: Verdict;
}

export interface Progress {
  sets_completed: number;
  planned_total_sets: number;
  segment_label: string;
  set_in_segment: number;
  state: string;
}

export const TILE_KEYS = ["depth", "posture", "symmetry"] as const;
export type TileKey = (typeof TILE_KEYS)[number];

export interface DashboardState {
  readonly tiles: Readonly<Record<TileKey, Tile>>;
  readonly history: ReadonlyArray<SetFeedbackEvent>;
  readonly progress: Progress | null;
  readonly complete: boolean;
}

export function initialState(): DashboardState {
  return {
    tiles: { depth: "neutral", posture: "neutral", symmetry: "neutral" },
    history: [],
    progress: null,
    complete: false,
  };
}

function isVerdict(v: unknown): v is Verdict {
  return v === "green" || v === "red";
}

export function parseEvent(raw: unknown): SetFeedbackEvent | null {
  if (typeof raw !== "object" || raw === null) return null;
  const o = raw as Record<string, unknown>;
  // the stream wraps verdicts; the feedback endpoint flattens them
  const v = (typeof o.verdicts === "object" && o.verdicts !== null
    ? (o.verdicts as Record<string, unknown>)
    : o) as Record<string, unknown>;
  if (typeof o.set_index !== "number") return null;
  if (!isVerdict(v.depth) || !isVerdict(v.posture) || !isVerdict(v.symmetry)) {
    return null;
  }
  return {
    set_index: o.set_index,
    depth: v.depth,
    posture: v.posture,
    symmetry: v.symmetry,
  };
}

/** Append one event; duplicates (same set_index) merge idempotently. */
export function applyEvent(
  state: DashboardState,
  event: SetFeedbackEvent,
): DashboardState {
  if (state.history.some((e) => e.set_index === event.set_index)) {
    return state;
  }
  const history = [...state.history, event].sort(
    (a, b) => a.set_index - b.set_index,
  );
  const latest = history[history.length - 1];
  return {
    ...state,
    history,
    tiles: { depth: latest.depth, posture: latest.posture, symmetry: latest.symmetry },
  };
}

export function applyProgress(
  state: DashboardState,
  progress: Progress,
): DashboardState {
  return { ...state, progress, complete: progress.state === "complete" };
}

export function markComplete(state: DashboardState): DashboardState {
  return { ...state, complete: true };
}

/** Fold a replayed event log; equals feeding the events one by one. */
export function replayEvents(
  state: DashboardState,
  events: ReadonlyArray<SetFeedbackEvent>,
): DashboardState {
  return events.reduce(applyEvent, state);
}

/** Per-metric verdict series across sets, for the trend strip. */
export function trendSeries(
  state: DashboardState,
): Record<TileKey, Array<{ set_index: number; verdict: Verdict }>> {
  const series: Record<TileKey, Array<{ set_index: number; verdict: Verdict }>> = {
    depth: [],
    posture: [],
    symmetry: [],
  };
  for (const event of state.history) {
    for (const key of TILE_KEYS) {
      series[key].push({ set_index: event.set_index, verdict: event[key] });
    }
  }
  return series;
}

/** The study shows feedback only while training; gate the end-set control. */
export function endSetEnabled(
  state: DashboardState,
  feedbackTrainingOnly: boolean,
): boolean {
  if (state.complete) return false;
  if (!feedbackTrainingOnly) return true;
  return state.progress?.segment_label === "training";
}
