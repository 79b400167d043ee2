// Typed client for the annotation service JSON API. The UI talks to these
// four endpoints and nothing else.

export type OpKind = "match" | "substitute" | "delete" | "insert";

export interface AlignmentOp {
  kind: OpKind;
  src_start: number;
  src_end: number;
  dst_start: number;
  dst_end: number;
}

export interface Sample {
  sample_id: string;
  segment_id: string;
  source: string;
  initial_translation: string;
  edits: string[];
  improved: string;
  diff: AlignmentOp[];
  model: string;
}

export interface Judgment {
  sample_id: string;
  realized: boolean;
  annotator: string;
  note?: string;
}

export interface Progress {
  total: number;
  judged: number;
}

export interface AnnotationApi {
  samples(): Promise<Sample[]>;
  judgments(): Promise<Judgment[]>;
  progress(): Promise<Progress>;
  submitJudgment(judgment: Judgment): Promise<void>;
}

export class ApiClient implements AnnotationApi {
  constructor(private readonly baseUrl: string = "") {}

  private async getJson<T>(path: string): Promise<T> {
    const response = await fetch(this.baseUrl + path);
    if (!response.ok) {
      throw new Error(`GET ${path}: HTTP ${response.status}`);
    }
    return (await response.json()) as T;
  }

  samples(): Promise<Sample[]> {
    return this.getJson<Sample[]>("/api/samples");
  }

  judgments(): Promise<Judgment[]> {
    return this.getJson<Judgment[]>("/api/judgments");
  }

  progress(): Promise<Progress> {
    return this.getJson<Progress>("/api/progress");
  }

  async submitJudgment(judgment: Judgment): Promise<void> {
    const response = await fetch(this.baseUrl + "/api/judgments", {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(judgment)
    });
    if (!response.ok) {
      throw new Error(`POST /api/judgments: HTTP ${response.status}`);
    }
  }
}
