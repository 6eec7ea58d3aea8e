// Live acceptance for the dashboard: drive a simulated training session
// through the real session service and check the three tiles track the
// service's per-set verdicts, including a planted shallow-depth set, and
// that a mid-session reconnect reproduces identical history.
//
// Requires the python package (wrlab CLI) on PATH; skips otherwise.

import { spawn, spawnSync } from "node:child_process";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import WebSocket from "ws";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { DashboardController, ServiceClient, SocketLike } from "../src/client.js";
import { DashboardState } from "../src/state.js";

const PORT = 8931;
const BASE = `http://127.0.0.1:${PORT}`;
const RED_DEPTH_SET = 8; // training set with planted shallow reps (global set 9)

const hasWrlab = spawnSync("wrlab", ["--help"]).status === 0;
const maybe = hasWrlab ? describe : describe.skip;

interface FrameRow {
  time_s: number;
  seq: number;
  marker_id: number;
  x_m: number;
  y_m: number;
  z_m: number;
  valid: boolean;
}

function simulateSession(dir: string): { manifest: unknown; sets: FrameRow[][] } {
  const depth: number[] = Array(75).fill(120.0);
  for (let i = (RED_DEPTH_SET - 1) * 5; i < RED_DEPTH_SET * 5; i++) depth[i] = 90.0;
  const job = {
    session: {
      manifest: {
        subject_id: "dash-1",
        group: "visual",
        capture_rate_hz: 30.0,
      },
      cadence_s: 1.2,
      rest_s: 0.5,
      preamble_s: 1.0,
      seed: 7,
      depth_deg: { training: depth },
    },
  };
  const jobPath = join(dir, "job.json");
  writeFileSync(jobPath, JSON.stringify(job));
  const sim = spawnSync("wrlab", ["simulate", "--spec", jobPath, "--out", dir], {
    encoding: "utf-8",
  });
  if (sim.status !== 0) throw new Error(`simulate failed: ${sim.stderr}`);
  const manifest = JSON.parse(readFileSync(join(dir, "manifest.json"), "utf-8"));

  // csv.writer emits \r\n line endings
  const lines = readFileSync(join(dir, "frames.csv"), "utf-8")
    .trim()
    .split(/\r?\n/);
  const sets: FrameRow[][] = [];
  let current: FrameRow[] = [];
  for (const line of lines.slice(1)) {
    const [time_s, seq, marker, x, y, z, valid] = line.trim().split(",");
    if (marker === "SET_END") {
      sets.push(current);
      current = [];
      continue;
    }
    current.push({
      time_s: Number(time_s),
      seq: Number(seq),
      marker_id: Number(marker),
      x_m: Number(x),
      y_m: Number(y),
      z_m: Number(z),
      valid: valid === "1",
    });
  }
  return { manifest, sets };
}

async function waitForService(): Promise<void> {
  for (let i = 0; i < 100; i++) {
    try {
      const r = await fetch(`${BASE}/sessions/probe/summary`);
      if (r.status === 404) return;
    } catch {
      // not up yet
    }
    await new Promise((resolve) => setTimeout(resolve, 100));
  }
  throw new Error("service did not come up");
}

async function postRows(sessionId: string, rows: FrameRow[]): Promise<void> {
  for (let i = 0; i < rows.length; i += 20000) {
    const r = await fetch(`${BASE}/sessions/${sessionId}/frames`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ rows: rows.slice(i, i + 20000) }),
    });
    if (!r.ok) throw new Error(`frames POST failed: ${r.status}`);
  }
}

const wsFactory = (url: string): SocketLike =>
  new WebSocket(url) as unknown as SocketLike;

maybe("dashboard against the live service", () => {
  let server: ReturnType<typeof spawn>;
  const workdir = mkdtempSync(join(tmpdir(), "wrlab-dash-"));

  beforeAll(async () => {
    server = spawn("wrlab", ["serve", "--port", String(PORT)], {
      stdio: "ignore",
    });
    await waitForService();
  }, 60_000);

  afterAll(() => {
    server?.kill();
  });

  it(
    "tiles track every set's verdicts, survive reconnection",
    async () => {
      const { manifest, sets } = simulateSession(workdir);
      expect(sets).toHaveLength(18); // 1 baseline + 15 training + post + retention

      const client = new ServiceClient(BASE);
      const sessionId = await client.createSession(manifest);

      const steadyStates: DashboardState[] = [];
      const steady = new DashboardController({
        client,
        sessionId,
        socketFactory: wsFactory,
        onChange: (s) => steadyStates.push(s),
        reconnectDelayMs: 50,
      });
      const flaky = new DashboardController({
        client,
        sessionId,
        socketFactory: wsFactory,
        onChange: () => {},
        reconnectDelayMs: 50,
      });
      await steady.start();
      await flaky.start();

      const tilesPerSet = new Map<number, DashboardState["tiles"]>();
      for (let k = 0; k < sets.length; k++) {
        await postRows(sessionId, sets[k]);
        // training sets are ended from the dashboard control; the capture
        // operator closes the others (the control is gated to training)
        const summary = await client.summary(sessionId);
        if (summary.progress.segment_label === "training") {
          await steady.endSet();
        } else {
          await client.endSet(sessionId);
        }
        const target = k + 1;
        await waitFor(() => steady.current().history.length >= target);
        tilesPerSet.set(target, steady.current().tiles);
        if (k === 8) {
          flaky.dropConnection(); // mid-session network loss
        }
      }
      await waitFor(() => steady.current().complete);
      await waitFor(() => flaky.current().history.length >= sets.length);

      // the authoritative log straight from the service
      const events = await client.feedback(sessionId);
      expect(events).toHaveLength(18);
      for (const event of events) {
        const tiles = tilesPerSet.get(event.set_index)!;
        expect(tiles).toEqual({
          depth: event.depth,
          posture: event.posture,
          symmetry: event.symmetry,
        });
      }

      // the planted shallow training set reads depth-red, everything else green
      const planted = events[RED_DEPTH_SET]; // baseline is set 1
      expect(planted.set_index).toBe(RED_DEPTH_SET + 1);
      expect(planted.depth).toBe("red");
      expect(planted.posture).toBe("green");
      expect(planted.symmetry).toBe("green");
      for (const event of events) {
        if (event.set_index !== RED_DEPTH_SET + 1) {
          expect(event.depth).toBe("green");
        }
      }

      // reconnecting client reproduced the identical history
      expect(flaky.current().history).toEqual(steady.current().history);
      expect(flaky.current().tiles).toEqual(steady.current().tiles);

      steady.stop();
      flaky.stop();
    },
    180_000,
  );
});

async function waitFor(cond: () => boolean, timeoutMs = 20_000): Promise<void> {
  const start = Date.now();
  while (!cond()) {
    if (Date.now() - start > timeoutMs) throw new Error("timed out waiting");
    await new Promise((resolve) => setTimeout(resolve, 25));
  }
}
