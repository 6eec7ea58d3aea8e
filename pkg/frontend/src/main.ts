// Browser entry point: ?session=<id>&api=<http base> wires the view to a
// running session service.

import { DashboardController, ServiceClient } from "./client.js";
import { locateElements, render } from "./dashboard.js";

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const api = params.get("api") ?? "http://127.0.0.1:8000";
  const sessionId = params.get("session");
  const els = locateElements(document);
  if (!sessionId) {
    els.status.textContent = "add ?session=<id> (and optional &api=<url>) to the URL";
    return;
  }
  const client = new ServiceClient(api);
  let trainingOnly = true;
  try {
    trainingOnly = (await client.summary(sessionId)).feedback_training_only;
  } catch {
    // default mirrors the study protocol
  }
  const controller = new DashboardController({
    client,
    sessionId,
    socketFactory: (url) => new WebSocket(url) as unknown as never,
    onChange: (state) => render(els, state, trainingOnly),
  });
  els.endSet.addEventListener("click", () => {
    void controller.endSet().catch((err) => {
      els.status.textContent = `end set failed: ${err}`;
    });
  });
  render(els, controller.current(), trainingOnly);
  await controller.start();
}

void boot();
