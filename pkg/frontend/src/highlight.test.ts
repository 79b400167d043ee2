import { describe, expect, it } from "vitest";

import type { AlignmentOp, Sample } from "./api.js";
import { hasChanges, improvedSpans, initialSpans } from "./highlight.js";

function op(
  kind: AlignmentOp["kind"],
  src_start: number,
  src_end: number,
  dst_start: number,
  dst_end: number
): AlignmentOp {
  return { kind, src_start, src_end, dst_start, dst_end };
}

function sample(diff: AlignmentOp[]): Sample {
  return {
    sample_id: "s",
    segment_id: "seg",
    source: "src",
    initial_translation: "abc",
    edits: ["e"],
    improved: "abc",
    diff,
    model: "m"
  };
}

describe("initialSpans / improvedSpans", () => {
  it("identical texts produce a single unhighlighted span", () => {
    const ops = [op("match", 0, 3, 0, 3)];
    expect(initialSpans("abc", ops)).toEqual([{ text: "abc", kind: "same" }]);
    expect(improvedSpans("abc", ops)).toEqual([{ text: "abc", kind: "same" }]);
  });

  it("an interior insertion highlights exactly one inserted range", () => {
    // "abcd" -> "abxcd": insert "x" between the two match runs
    const ops = [op("match", 0, 2, 0, 2), op("insert", 2, 2, 2, 3), op("match", 2, 4, 3, 5)];
    const spans = improvedSpans("abxcd", ops);
    expect(spans).toEqual([
      { text: "ab", kind: "same" },
      { text: "x", kind: "insert" },
      { text: "cd", kind: "same" }
    ]);
    // the initial side shows no highlight: nothing was removed or replaced
    expect(initialSpans("abcd", ops)).toEqual([{ text: "abcd", kind: "same" }]);
  });

  it("deletions show only on the initial side", () => {
    // "ab" -> "b"
    const ops = [op("delete", 0, 1, 0, 0), op("match", 1, 2, 0, 1)];
    expect(initialSpans("ab", ops)).toEqual([
      { text: "a", kind: "delete" },
      { text: "b", kind: "same" }
    ]);
    expect(improvedSpans("b", ops)).toEqual([{ text: "b", kind: "same" }]);
  });

  it("substitutions show on both sides", () => {
    // "cat" -> "car"
    const ops = [op("match", 0, 2, 0, 2), op("substitute", 2, 3, 2, 3)];
    expect(initialSpans("cat", ops)).toEqual([
      { text: "ca", kind: "same" },
      { text: "t", kind: "substitute" }
    ]);
    expect(improvedSpans("car", ops)).toEqual([
      { text: "ca", kind: "same" },
      { text: "r", kind: "substitute" }
    ]);
  });

  it("adjacent spans of the same kind merge", () => {
    const ops = [op("substitute", 0, 1, 0, 1), op("substitute", 1, 2, 1, 2)];
    expect(initialSpans("ab", ops)).toEqual([{ text: "ab", kind: "substitute" }]);
  });

  it("span texts concatenate back to the full text on each side", () => {
    const ops = [
      op("delete", 0, 2, 0, 0),
      op("match", 2, 5, 0, 3),
      op("substitute", 5, 7, 3, 5),
      op("insert", 7, 7, 5, 9)
    ];
    const initial = "xxabcde";
    const improved = "abcZZwxyz";
    const initialText = initialSpans(initial, ops).map((s) => s.text).join("");
    const improvedText = improvedSpans(improved, ops).map((s) => s.text).join("");
    expect(initialText).toBe(initial);
    expect(improvedText).toBe(improved);
  });
});

describe("hasChanges", () => {
  it("is false for an all-match diff", () => {
    expect(hasChanges(sample([op("match", 0, 3, 0, 3)]))).toBe(false);
  });

  it("is true when any edit op exists", () => {
    expect(hasChanges(sample([op("match", 0, 3, 0, 3), op("insert", 3, 3, 3, 4)]))).toBe(true);
  });
});
