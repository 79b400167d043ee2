// Derives highlight spans for the two translation blocks from the diff the
// server precomputed. The client never re-aligns text: one alignment
// implementation lives on the server, and this module only projects its op
// ranges onto each side.

import type { AlignmentOp, Sample } from "./api.js";

export type HighlightKind = "same" | "substitute" | "delete" | "insert";

export interface TextSpan {
  text: string;
  kind: HighlightKind;
}

function push(spans: TextSpan[], text: string, kind: HighlightKind): void {
  if (!text) return;
  const last = spans[spans.length - 1];
  if (last && last.kind === kind) {
    last.text += text;
  } else {
    spans.push({ text, kind });
  }
}

/** Spans over the initial translation: deleted and substituted ranges. */
export function initialSpans(text: string, ops: AlignmentOp[]): TextSpan[] {
  const spans: TextSpan[] = [];
  for (const op of ops) {
    const piece = text.slice(op.src_start, op.src_end);
    if (op.kind === "insert") continue; // nothing of the initial text involved
    push(spans, piece, op.kind === "match" ? "same" : op.kind);
  }
  return spans;
}

/** Spans over the improved translation: inserted and substituted ranges. */
export function improvedSpans(text: string, ops: AlignmentOp[]): TextSpan[] {
  const spans: TextSpan[] = [];
  for (const op of ops) {
    const piece = text.slice(op.dst_start, op.dst_end);
    if (op.kind === "delete") continue; // nothing of the improved text involved
    push(spans, piece, op.kind === "match" ? "same" : op.kind);
  }
  return spans;
}

export function hasChanges(sample: Sample): boolean {
  return sample.diff.some((op) => op.kind !== "match");
}
