/**
 * HTTP client for the annotation service plus an offline-tolerant submit
 * queue.
 *
 * Submits are optimistic: a network failure parks the latest payload per
 * sentence in a queue, and a later flush retries in order. Reconciliation is
 * by record version: the server numbers every accepted write, and the client
 * adopts the highest acknowledged version per sentence. Server-side
 * validation failures (4xx) are never retried; they surface inline.
 */

import type {
  NextResponse,
  Progress,
  SubmitPayload,
  SubmitResponse,
  Topic,
} from "./types.js";

export interface ResponseLike {
  ok: boolean;
  status: number;
  json(): Promise<unknown>;
  text(): Promise<string>;
}

export type FetchLike = (url: string, init?: {
  method?: string;
  headers?: Record<string, string>;
  body?: string;
}) => Promise<ResponseLike>;

export class ApiError extends Error {
  constructor(readonly status: number, detail: string) {
    super(detail);
  }
}

async function detailOf(response: ResponseLike): Promise<string> {
  try {
    const payload = (await response.json()) as { detail?: string };
    return payload.detail ?? `HTTP ${response.status}`;
  } catch {
    return `HTTP ${response.status}`;
  }
}

export class ApiClient {
  constructor(
    private readonly baseUrl: string,
    private readonly token: string,
    private readonly fetchFn: FetchLike,
  ) {}

  private headers(): Record<string, string> {
    return {
      "Content-Type": "application/json",
      "X-Annotator-Token": this.token,
    };
  }

  private async get<T>(path: string): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path,
                                        { headers: this.headers() });
    if (!response.ok) {
      throw new ApiError(response.status, await detailOf(response));
    }
    return (await response.json()) as T;
  }

  taxonomy(): Promise<{ topics: Topic[] }> {
    return this.get("/api/taxonomy");
  }

  next(): Promise<NextResponse> {
    return this.get("/api/next");
  }

  progress(): Promise<Progress> {
    return this.get("/api/progress");
  }

  /** Raw dashboard text; the renderer needs the source bytes, not a re-parse. */
  async dashboardText(): Promise<string> {
    const response = await this.fetchFn(this.baseUrl + "/api/agreement/dashboard",
                                        { headers: this.headers() });
    if (!response.ok) {
      throw new ApiError(response.status, await detailOf(response));
    }
    return response.text();
  }

  async submit(payload: SubmitPayload): Promise<SubmitResponse> {
    const response = await this.fetchFn(this.baseUrl + "/api/annotations", {
      method: "POST",
      headers: this.headers(),
      body: JSON.stringify(payload),
    });
    if (!response.ok) {
      throw new ApiError(response.status, await detailOf(response));
    }
    return (await response.json()) as SubmitResponse;
  }
}

export type SubmitOutcome =
  | { kind: "accepted"; version: number }
  | { kind: "queued" }
  | { kind: "rejected"; status: number; detail: string };

export class SubmitQueue {
  private pending = new Map<string, SubmitPayload>();

  constructor(private readonly client: ApiClient) {}

  get size(): number {
    return this.pending.size;
  }

  queuedFor(sentenceId: string): SubmitPayload | undefined {
    return this.pending.get(sentenceId);
  }

  /**
   * Try to submit; on connectivity failure keep (only) the latest payload for
   * the sentence and report `queued`. Server rejections are final.
   */
  async submit(payload: SubmitPayload): Promise<SubmitOutcome> {
    try {
      const response = await this.client.submit(payload);
      return { kind: "accepted", version: response.version };
    } catch (error) {
      if (error instanceof ApiError) {
        this.pending.delete(payload.sentence_id);
        return { kind: "rejected", status: error.status, detail: error.message };
      }
      this.pending.set(payload.sentence_id, payload);
      return { kind: "queued" };
    }
  }

  /**
   * Retry everything queued, in insertion order. Entries that fail on
   * connectivity stay queued; acknowledged entries report their new server
   * version so the caller can reconcile drafts.
   */
  async flush(): Promise<Map<string, SubmitOutcome>> {
    const outcomes = new Map<string, SubmitOutcome>();
    for (const [sentenceId, payload] of [...this.pending]) {
      this.pending.delete(sentenceId);
      const outcome = await this.submit(payload);
      outcomes.set(sentenceId, outcome);
    }
    return outcomes;
  }
}
