// DOM rendering: three verdict tiles, protocol progress, trend strip,
// and the end-set control. The training view stays binary (color only);
// numbers live in the service reports, not here.

import { DashboardState, TILE_KEYS, endSetEnabled, trendSeries } from "./state.js";

const TILE_LABELS: Record<(typeof TILE_KEYS)[number], string> = {
  depth: "Depth",
  posture: "Posture",
  symmetry: "Symmetry",
};

export interface DashboardElements {
  tiles: HTMLElement;
  progress: HTMLElement;
  trend: HTMLElement;
  endSet: HTMLButtonElement;
  status: HTMLElement;
}

export function locateElements(root: Document): DashboardElements {
  const get = (id: string) => {
    const el = root.getElementById(id);
    if (!el) throw new Error(`missing #${id}`);
    return el;
  };
  return {
    tiles: get("tiles"),
    progress: get("progress"),
    trend: get("trend"),
    endSet: get("end-set") as HTMLButtonElement,
    status: get("status"),
  };
}

export function render(
  els: DashboardElements,
  state: DashboardState,
  feedbackTrainingOnly: boolean,
): void {
  els.tiles.replaceChildren(
    ...TILE_KEYS.map((key) => {
      const tile = els.tiles.ownerDocument.createElement("div");
      tile.className = `tile tile-${state.tiles[key]}`;
      tile.dataset.metric = key;
      tile.dataset.verdict = state.tiles[key];
      const label = els.tiles.ownerDocument.createElement("span");
      label.textContent = TILE_LABELS[key];
      tile.appendChild(label);
      return tile;
    }),
  );

  const p = state.progress;
  if (p) {
    els.progress.textContent =
      `${p.segment_label} — set ${p.set_in_segment}` +
      ` · ${p.sets_completed}/${p.planned_total_sets} sets done`;
  } else {
    els.progress.textContent = "waiting for session…";
  }

  const series = trendSeries(state);
  els.trend.replaceChildren(
    ...TILE_KEYS.map((key) => {
      const row = els.trend.ownerDocument.createElement("div");
      row.className = "trend-row";
      const name = els.trend.ownerDocument.createElement("span");
      name.className = "trend-label";
      name.textContent = TILE_LABELS[key];
      row.appendChild(name);
      for (const point of series[key]) {
        const cell = els.trend.ownerDocument.createElement("span");
        cell.className = `trend-cell trend-${point.verdict}`;
        cell.title = `set ${point.set_index}: ${point.verdict}`;
        row.appendChild(cell);
      }
      return row;
    }),
  );

  els.endSet.disabled = !endSetEnabled(state, feedbackTrainingOnly);
  els.status.textContent = state.complete
    ? "session complete"
    : `${state.history.length} sets scored`;
}
