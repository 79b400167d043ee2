// Bootstrap and event wiring: loads the session, renders the current
// screen, and maps y/n keys onto judgments.

import { ApiClient } from "./api.js";
import { AnnotationSession } from "./session.js";
import { banner, completion, controls, el, sampleBlocks, topbar } from "./view.js";

const api = new ApiClient("");
const session = new AnnotationSession(api, "browser");

function render(): void {
  const root = document.getElementById("app");
  if (!root) return;
  root.replaceChildren();

  const snap = session.snapshot();
  root.appendChild(topbar(snap.judgedCount, snap.total));

  if (snap.pendingRetries > 0) {
    root.appendChild(
      banner(
        "warn",
        `${snap.pendingRetries} judgment(s) waiting to reach the server`,
        "Retry now",
        () => void session.flushRetries().then(render)
      )
    );
  }

  const sample = session.current();
  if (sample) {
    for (const section of sampleBlocks(sample)) {
      root.appendChild(section);
    }
    root.appendChild(controls((realized) => void judge(realized)));
  } else {
    root.appendChild(completion(snap.judgedCount, snap.total));
  }
}

async function judge(realized: boolean): Promise<void> {
  await session.judge(realized);
  render();
}

function onKey(event: KeyboardEvent): void {
  if (!session.current()) return;
  if (event.key === "y") void judge(true);
  if (event.key === "n") void judge(false);
}

async function start(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) return;
  root.replaceChildren(el("p", "", "Loading samples..."));
  try {
    await session.load();
  } catch (error) {
    root.replaceChildren();
    root.appendChild(
      banner("error", `Could not load samples: ${String(error)}`, "Retry", () => void start())
    );
    return;
  }
  render();
}

document.addEventListener("keydown", onKey);
void start();
