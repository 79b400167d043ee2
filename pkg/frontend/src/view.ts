// DOM construction for the annotation screens. Pure builders with no
// module-level side effects, so tests can render pieces in isolation.

import type { Sample } from "./api.js";
import { improvedSpans, initialSpans, type TextSpan } from "./highlight.js";

export function el(tag: string, className?: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function spanNodes(spans: TextSpan[]): HTMLElement {
  const holder = el("p", "text");
  for (const span of spans) {
    holder.appendChild(el("span", span.kind === "same" ? "" : `hl hl-${span.kind}`, span.text));
  }
  return holder;
}

function block(title: string, body: HTMLElement): HTMLElement {
  const section = el("section", "block");
  section.appendChild(el("h2", "", title));
  section.appendChild(body);
  return section;
}

/** The four labeled blocks for one sample: source, translation with
 * deletion/substitution highlights, the numbered proposed edits, improved
 * translation with insertion/substitution highlights. */
export function sampleBlocks(sample: Sample): HTMLElement[] {
  const list = el("ol", "edits");
  for (const edit of sample.edits) {
    list.appendChild(el("li", "", edit));
  }
  return [
    block("Source", el("p", "text", sample.source)),
    block("Translation", spanNodes(initialSpans(sample.initial_translation, sample.diff))),
    block("Proposed Improvements", list),
    block("Improved Translation", spanNodes(improvedSpans(sample.improved, sample.diff)))
  ];
}

export function controls(onJudge: (realized: boolean) => void): HTMLElement {
  const row = el("div", "controls");
  const yes = el("button", "yes", "Realized (y)") as HTMLButtonElement;
  const no = el("button", "no", "Not realized (n)") as HTMLButtonElement;
  yes.onclick = () => onJudge(true);
  no.onclick = () => onJudge(false);
  row.appendChild(yes);
  row.appendChild(no);
  return row;
}

export function topbar(judged: number, total: number): HTMLElement {
  const header = el("header", "topbar");
  header.appendChild(el("h1", "", "Edit realization review"));
  header.appendChild(el("span", "progress", `${judged}/${total} judged`));
  return header;
}

export function completion(judged: number, total: number): HTMLElement {
  const done = el("div", "complete");
  done.appendChild(el("h2", "", "All samples judged"));
  done.appendChild(el("p", "", `${judged}/${total} complete`));
  return done;
}

export function banner(
  kind: "error" | "warn",
  message: string,
  actionLabel: string,
  onAction: () => void
): HTMLElement {
  const box = el("div", `banner ${kind}`);
  box.appendChild(el("span", "", message));
  const action = el("button", "", actionLabel) as HTMLButtonElement;
  action.onclick = onAction;
  box.appendChild(action);
  return box;
}
