import { describe, expect, it } from "vitest";

import type { AnnotationApi, Judgment, Progress, Sample } from "./api.js";
import { AnnotationSession, firstUnjudgedIndex } from "./session.js";

function sample(id: string): Sample {
  return {
    sample_id: id,
    segment_id: `seg-${id}`,
    source: "src",
    initial_translation: "a",
    edits: ["edit"],
    improved: "b",
    diff: [{ kind: "substitute", src_start: 0, src_end: 1, dst_start: 0, dst_end: 1 }],
    model: "m"
  };
}

/** In-memory stand-in for the server, with a switchable outage. */
class FakeApi implements AnnotationApi {
  stored: Judgment[] = [];
  offline = false;

  constructor(private readonly sampleList: Sample[]) {}

  async samples(): Promise<Sample[]> {
    return this.sampleList;
  }

  async judgments(): Promise<Judgment[]> {
    return [...this.stored];
  }

  async progress(): Promise<Progress> {
    const judged = new Set(this.stored.map((j) => j.sample_id));
    return { total: this.sampleList.length, judged: judged.size };
  }

  async submitJudgment(judgment: Judgment): Promise<void> {
    if (this.offline) {
      throw new Error("connection refused");
    }
    this.stored.push(judgment);
  }
}

describe("firstUnjudgedIndex", () => {
  const samples = [sample("a"), sample("b"), sample("c")];

  it("starts at zero with nothing judged", () => {
    expect(firstUnjudgedIndex(samples, new Set())).toBe(0);
  });

  it("skips judged prefixes", () => {
    expect(firstUnjudgedIndex(samples, new Set(["a", "b"]))).toBe(2);
  });

  it("skips judged holes", () => {
    expect(firstUnjudgedIndex(samples, new Set(["b"]))).toBe(0);
  });

  it("is null when everything is judged", () => {
    expect(firstUnjudgedIndex(samples, new Set(["a", "b", "c"]))).toBe(null);
  });
});

describe("AnnotationSession", () => {
  it("walks samples in order and completes", async () => {
    const api = new FakeApi([sample("a"), sample("b"), sample("c")]);
    const session = new AnnotationSession(api, "tester");
    await session.load();

    expect(session.current()?.sample_id).toBe("a");
    await session.judge(true);
    expect(session.current()?.sample_id).toBe("b");
    await session.judge(false);
    await session.judge(true);

    const snap = session.snapshot();
    expect(snap.currentIndex).toBe(null);
    expect(snap.judgedCount).toBe(3);
    expect(api.stored.map((j) => j.realized)).toEqual([true, false, true]);
    expect(api.stored.every((j) => j.annotator === "tester")).toBe(true);
  });

  it("resumes at the first unjudged sample after a reload", async () => {
    const api = new FakeApi([sample("a"), sample("b"), sample("c")]);
    const first = new AnnotationSession(api);
    await first.load();
    await first.judge(true);
    await first.judge(false);

    const refreshed = new AnnotationSession(api); // same server, fresh client
    await refreshed.load();
    expect(refreshed.snapshot().currentIndex).toBe(2);
    expect(refreshed.current()?.sample_id).toBe("c");
  });

  it("keeps a failed judgment in the retry queue and flushes later", async () => {
    const api = new FakeApi([sample("a"), sample("b")]);
    const session = new AnnotationSession(api);
    await session.load();

    api.offline = true;
    await session.judge(true);
    expect(session.snapshot().pendingRetries).toBe(1);
    expect(session.current()?.sample_id).toBe("b"); // still advances locally
    expect(api.stored).toEqual([]);

    api.offline = false;
    expect(await session.flushRetries()).toBe(0);
    expect(api.stored.map((j) => j.sample_id)).toEqual(["a"]);
  });

  it("flush keeps judgments that still fail", async () => {
    const api = new FakeApi([sample("a")]);
    const session = new AnnotationSession(api);
    await session.load();
    api.offline = true;
    await session.judge(false);
    expect(await session.flushRetries()).toBe(1);
    expect(session.snapshot().pendingRetries).toBe(1);
  });

  it("ignores stored judgments for unknown samples", async () => {
    const api = new FakeApi([sample("a")]);
    api.stored.push({ sample_id: "ghost", realized: true, annotator: "" });
    const session = new AnnotationSession(api);
    await session.load();
    expect(session.snapshot().judgedCount).toBe(0);
    expect(session.current()?.sample_id).toBe("a");
  });

  it("judging with no current sample is an error", async () => {
    const api = new FakeApi([sample("a")]);
    const session = new AnnotationSession(api);
    await session.load();
    await session.judge(true);
    await expect(session.judge(true)).rejects.toThrow("no sample");
  });
});
