// Annotation session state: which sample is up, what has been judged, and a
// retry queue for judgments the server did not accept (e.g. it was briefly
// offline). Resume-on-refresh works because load() rebuilds the judged set
// from the server, so the session always lands on the first unjudged sample.

import type { AnnotationApi, Judgment, Sample } from "./api.js";

export interface SessionSnapshot {
  total: number;
  judgedCount: number;
  currentIndex: number | null; // null once every sample is judged
  pendingRetries: number;
}

export function firstUnjudgedIndex(samples: Sample[], judged: Set<string>): number | null {
  for (let index = 0; index < samples.length; index++) {
    const sample = samples[index];
    if (sample && !judged.has(sample.sample_id)) {
      return index;
    }
  }
  return null;
}

export class AnnotationSession {
  private samples: Sample[] = [];
  private judged = new Set<string>();
  private index: number | null = null;
  private retryQueue: Judgment[] = [];

  constructor(
    private readonly api: AnnotationApi,
    readonly annotator: string = ""
  ) {}

  async load(): Promise<void> {
    this.samples = await this.api.samples();
    const known = new Set(this.samples.map((sample) => sample.sample_id));
    const stored = await this.api.judgments();
    this.judged = new Set(
      stored.map((judgment) => judgment.sample_id).filter((id) => known.has(id))
    );
    this.index = firstUnjudgedIndex(this.samples, this.judged);
  }

  current(): Sample | null {
    if (this.index === null) return null;
    return this.samples[this.index] ?? null;
  }

  snapshot(): SessionSnapshot {
    return {
      total: this.samples.length,
      judgedCount: this.judged.size,
      currentIndex: this.index,
      pendingRetries: this.retryQueue.length
    };
  }

  /** Judge the current sample and advance. A failed POST keeps the judgment
   * in the retry queue; the annotator's decision is never lost silently. */
  async judge(realized: boolean, note?: string): Promise<void> {
    const sample = this.current();
    if (!sample) {
      throw new Error("no sample left to judge");
    }
    const judgment: Judgment = {
      sample_id: sample.sample_id,
      realized,
      annotator: this.annotator,
      ...(note ? { note } : {})
    };
    try {
      await this.api.submitJudgment(judgment);
    } catch {
      this.retryQueue.push(judgment);
    }
    this.judged.add(sample.sample_id);
    this.index = firstUnjudgedIndex(this.samples, this.judged);
  }

  /** Re-send queued judgments; returns how many are still pending. */
  async flushRetries(): Promise<number> {
    const remaining: Judgment[] = [];
    for (const judgment of this.retryQueue) {
      try {
        await this.api.submitJudgment(judgment);
      } catch {
        remaining.push(judgment);
      }
    }
    this.retryQueue = remaining;
    return remaining.length;
  }
}
