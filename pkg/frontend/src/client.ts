// Service client plus the reconnecting stream controller. All verdicts
// come from the service; the dashboard computes nothing biomechanical.

import {
  DashboardState,
  Progress,
  SetFeedbackEvent,
  applyEvent,
  applyProgress,
  initialState,
  markComplete,
  parseEvent,
  replayEvents,
} from "./state.js";

export type FetchLike = (
  url: string,
  init?: { method?: string; headers?: Record<string, string>; body?: string },
) => Promise<{ ok: boolean; status: number; json(): Promise<unknown> }>;

export interface SocketLike {
  onmessage: ((ev: { data: unknown }) => void) | null;
  onclose: (() => void) | null;
  onerror: (() => void) | null;
  close(): void;
}

export type SocketFactory = (url: string) => SocketLike;

export interface SessionSummary {
  state: string;
  feedback_training_only: boolean;
  progress: Progress;
}

export class ServiceClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch as unknown as FetchLike,
  ) {}

  private async request(path: string, method = "GET", body?: unknown) {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, {
      method,
      headers: body === undefined ? undefined : { "content-type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    });
    if (!response.ok) {
      throw new Error(`${method} ${path} failed: HTTP ${response.status}`);
    }
    return response.json();
  }

  async createSession(manifest: unknown): Promise<string> {
    const body = (await this.request("/sessions", "POST", manifest)) as {
      session_id: string;
    };
    return body.session_id;
  }

  async feedback(sessionId: string): Promise<SetFeedbackEvent[]> {
    const body = (await this.request(`/sessions/${sessionId}/feedback`)) as {
      events: unknown[];
    };
    return body.events
      .map(parseEvent)
      .filter((e): e is SetFeedbackEvent => e !== null);
  }

  async summary(sessionId: string): Promise<SessionSummary> {
    return (await this.request(`/sessions/${sessionId}/summary`)) as SessionSummary;
  }

  async endSet(sessionId: string): Promise<unknown> {
    return this.request(`/sessions/${sessionId}/set-end`, "POST");
  }

  streamUrl(sessionId: string): string {
    return `${this.baseUrl.replace(/^http/, "ws")}/sessions/${sessionId}/stream`;
  }
}

export interface ControllerOptions {
  client: ServiceClient;
  sessionId: string;
  socketFactory: SocketFactory;
  onChange: (state: DashboardState) => void;
  /** reconnect backoff in ms; tests shrink it */
  reconnectDelayMs?: number;
  scheduler?: (fn: () => void, ms: number) => void;
}

/**
 * Owns the dashboard state: replays the feedback log on (re)connect, then
 * folds live stream messages. Because the state is a pure function of the
 * event log and events merge idempotently by set index, a reconnecting
 * client converges to the same state as an uninterrupted one.
 */
export class DashboardController {
  private state: DashboardState = initialState();
  private socket: SocketLike | null = null;
  private stopped = false;

  constructor(private readonly options: ControllerOptions) {}

  current(): DashboardState {
    return this.state;
  }

  private emit(next: DashboardState) {
    if (next !== this.state) {
      this.state = next;
      this.options.onChange(this.state);
    }
  }

  async start(): Promise<void> {
    await this.resync();
    this.connect();
  }

  /** Replay the authoritative event log (used on start and reconnect). */
  async resync(): Promise<void> {
    const events = await this.options.client.feedback(this.options.sessionId);
    let next = replayEvents(this.state, events);
    try {
      const summary = await this.options.client.summary(this.options.sessionId);
      next = applyProgress(next, summary.progress);
    } catch {
      // summary is advisory; the event log already carries the verdicts
    }
    this.emit(next);
  }

  private connect(): void {
    if (this.stopped) return;
    const url = this.options.client.streamUrl(this.options.sessionId);
    const socket = this.options.socketFactory(url);
    this.socket = socket;
    socket.onmessage = (ev) => {
      let message: unknown;
      try {
        message = JSON.parse(String(ev.data));
      } catch {
        return;
      }
      this.handleMessage(message);
    };
    const reconnect = () => {
      if (this.stopped || this.state.complete) return;
      const delay = this.options.reconnectDelayMs ?? 1000;
      const schedule = this.options.scheduler ?? setTimeout;
      schedule(() => {
        if (this.stopped) return;
        void this.resync().then(() => this.connect());
      }, delay);
    };
    socket.onclose = reconnect;
    socket.onerror = () => socket.close();
  }

  handleMessage(message: unknown): void {
    const o = message as Record<string, unknown>;
    if (o && o.complete === true) {
      this.emit(markComplete(this.state));
      return;
    }
    const event = parseEvent(message);
    let next = this.state;
    if (event) {
      next = applyEvent(next, event);
    }
    if (o && typeof o.progress === "object" && o.progress !== null) {
      next = applyProgress(next, o.progress as Progress);
    }
    this.emit(next);
  }

  async endSet(): Promise<void> {
    await this.options.client.endSet(this.options.sessionId);
  }

  stop(): void {
    this.stopped = true;
    this.socket?.close();
  }

  /** Test hook: sever the socket as if the network dropped. */
  dropConnection(): void {
    this.socket?.onclose?.();
  }
}
