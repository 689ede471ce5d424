/**
 * Typed client for the annotation service endpoints.
 *
 * The client is transport-only: it never decides protocol questions
 * (gating lives in the session layer) and never caches votes locally --
 * the server's log is the single source of truth.
 */

export interface TaskCode {
  header: string;
  docstring: string;
  body: string;
}

export interface Task {
  pair_id: string;
  query: string;
  code: TaskCode;
  guidelines: string[];
}

export interface NextTaskResponse {
  task: Task | null;
  done: boolean;
}

export interface Judgment {
  pair_id: string;
  annotator_id: string;
  intent: "yes" | "no";
  answer?: 0 | 1;
}

export interface Progress {
  pairs_total: number;
  pairs_complete: number;
  votes_total: number;
  annotators: number;
  per_annotator: Record<string, number>;
}

export interface AgreementReport {
  alpha_answer: number | null;
  alpha_answer_degenerate: boolean;
  alpha_intent: number | null;
  alpha_intent_degenerate: boolean;
  per_item_share: Record<string, number>;
}

export interface ExportedPair {
  pair_id: string;
  query: string;
  code: string;
  label: 0 | 1;
  votes: number[];
}

export interface ExportPayload {
  pairs: ExportedPair[];
  report: AgreementReport & { retained: string[]; removed: string[] };
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly detail: string,
  ) {
    super(`HTTP ${status}: ${detail}`);
    this.name = "ApiError";
  }

  get unauthorized(): boolean {
    return this.status === 401;
  }

  get duplicate(): boolean {
    return this.status === 409;
  }
}

/** The slice of the service the annotation session depends on. */
export interface AnnotationApi {
  register(name?: string): Promise<{ annotator_id: string }>;
  nextTask(annotatorId: string): Promise<NextTaskResponse>;
  submitJudgment(judgment: Judgment): Promise<{ accepted: boolean; pair_id: string }>;
}

type FetchLike = typeof fetch;

export class ApiClient implements AnnotationApi {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchImpl: FetchLike = fetch,
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchImpl(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      let detail = response.statusText;
      try {
        const body = (await response.json()) as { detail?: string };
        if (body.detail) detail = body.detail;
      } catch {
        // non-JSON error body: keep the status text
      }
      throw new ApiError(response.status, detail);
    }
    return (await response.json()) as T;
  }

  register(name?: string): Promise<{ annotator_id: string }> {
    return this.request("/annotators", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ name: name ?? null }),
    });
  }

  nextTask(annotatorId: string): Promise<NextTaskResponse> {
    return this.request(`/tasks/next?annotator=${encodeURIComponent(annotatorId)}`);
  }

  submitJudgment(judgment: Judgment): Promise<{ accepted: boolean; pair_id: string }> {
    return this.request("/judgments", {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(judgment),
    });
  }

  progress(): Promise<Progress> {
    return this.request("/progress");
  }

  agreement(): Promise<AgreementReport> {
    return this.request("/agreement");
  }

  exportData(): Promise<ExportPayload> {
    return this.request("/export");
  }
}
