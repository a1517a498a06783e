import { ApiClient } from "./api.js";
import { DomView } from "./dom.js";
import { SessionFlow } from "./session.js";

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) {
    throw new Error("missing #app container");
  }
  const params = new URLSearchParams(window.location.search);
  const strategy = params.get("strategy") ?? "random";
  const resumeId = params.get("session") ?? undefined;
  const api = new ApiClient("");
  const view = new DomView(root, "/assets/");
  const flow = new SessionFlow(api, view);
  await flow.start(strategy, resumeId);
  if (flow.state.sessionId) {
    // keep the id in the URL so a reload resumes at the same item
    params.set("session", flow.state.sessionId);
    window.history.replaceState(null, "", `?${params.toString()}`);
  }
  await flow.run(() => view.awaitAnswer());
}

boot().catch((err) => {
  const root = document.getElementById("app");
  if (root) {
    root.textContent = `Something went wrong: ${err}`;
  }
});
