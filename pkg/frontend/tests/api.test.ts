import { describe, expect, it } from "vitest";

import { ApiClient, ApiError, SubmitQueue } from "../src/api.js";
import type { FetchLike, ResponseLike } from "../src/api.js";
import type { SubmitPayload } from "../src/types.js";

function jsonResponse(status: number, payload: unknown): ResponseLike {
  return {
    ok: status >= 200 && status < 300,
    status,
    json: async () => payload,
    text: async () => JSON.stringify(payload),
  };
}

/** Scriptable backend: offline toggles connectivity; versions per sentence. */
class FakeBackend {
  offline = false;
  versions = new Map<string, number>();
  requests: SubmitPayload[] = [];

  fetch: FetchLike = async (url, init) => {
    if (this.offline) {
      throw new TypeError("NetworkError: failed to fetch");
    }
    if (url.endsWith("/api/annotations") && init?.method === "POST") {
      const payload = JSON.parse(init.body!) as SubmitPayload;
      this.requests.push(payload);
      if (payload.irrelevant && payload.labels.length > 0) {
        return jsonResponse(422, { detail: "Irrelevant is exclusive" });
      }
      const version = (this.versions.get(payload.sentence_id) ?? 0) + 1;
      this.versions.set(payload.sentence_id, version);
      return jsonResponse(201, {
        sentence_id: payload.sentence_id,
        annotator_id: "A1",
        version,
      });
    }
    if (url.endsWith("/api/progress")) {
      return jsonResponse(200, { assigned: 5, labeled: 1, remaining: 4 });
    }
    return jsonResponse(404, { detail: `no route: ${url}` });
  };
}

function makePayload(sentenceId: string, labels: number[]): SubmitPayload {
  return { sentence_id: sentenceId, labels, irrelevant: false, comment: null };
}

describe("ApiClient", () => {
  it("attaches the annotator token and parses payloads", async () => {
    let seenHeaders: Record<string, string> | undefined;
    const fetchFn: FetchLike = async (_url, init) => {
      seenHeaders = init?.headers;
      return jsonResponse(200, { assigned: 1, labeled: 0, remaining: 1 });
    };
    const client = new ApiClient("", "A3", fetchFn);
    const progress = await client.progress();
    expect(progress.remaining).toBe(1);
    expect(seenHeaders?.["X-Annotator-Token"]).toBe("A3");
  });

  it("raises ApiError with the server detail", async () => {
    const client = new ApiClient("", "A1",
                                 async () => jsonResponse(422, { detail: "nope" }));
    await expect(client.progress()).rejects.toThrow(ApiError);
    await expect(client.progress()).rejects.toThrow("nope");
  });
});

describe("SubmitQueue offline behavior", () => {
  it("accepts submissions when online", async () => {
    const backend = new FakeBackend();
    const queue = new SubmitQueue(new ApiClient("", "A1", backend.fetch));
    const outcome = await queue.submit(makePayload("s1", [2]));
    expect(outcome).toEqual({ kind: "accepted", version: 1 });
    expect(queue.size).toBe(0);
  });

  it("queues while offline and reconciles versions on retry", async () => {
    const backend = new FakeBackend();
    const queue = new SubmitQueue(new ApiClient("", "A1", backend.fetch));

    // a first successful submit establishes version 1
    await queue.submit(makePayload("s1", [2]));

    backend.offline = true;
    const off = await queue.submit(makePayload("s1", [2, 3]));
    expect(off.kind).toBe("queued");
    // editing again while offline keeps only the latest payload
    await queue.submit(makePayload("s1", [4]));
    expect(queue.size).toBe(1);
    expect(queue.queuedFor("s1")?.labels).toEqual([4]);

    backend.offline = false;
    const outcomes = await queue.flush();
    expect(outcomes.get("s1")).toEqual({ kind: "accepted", version: 2 });
    expect(queue.size).toBe(0);
    // the server saw the reconnect exactly once with the latest labels
    const submitted = backend.requests.filter((r) => r.labels.length > 0);
    expect(submitted[submitted.length - 1].labels).toEqual([4]);
  });

  it("keeps entries queued while the network stays down", async () => {
    const backend = new FakeBackend();
    backend.offline = true;
    const queue = new SubmitQueue(new ApiClient("", "A1", backend.fetch));
    await queue.submit(makePayload("s1", [1]));
    const outcomes = await queue.flush();
    expect(outcomes.get("s1")).toEqual({ kind: "queued" });
    expect(queue.size).toBe(1);
  });

  it("does not retry server-side rejections", async () => {
    const backend = new FakeBackend();
    const queue = new SubmitQueue(new ApiClient("", "A1", backend.fetch));
    const bad: SubmitPayload = {
      sentence_id: "s1", labels: [1], irrelevant: true, comment: null,
    };
    const outcome = await queue.submit(bad);
    expect(outcome.kind).toBe("rejected");
    expect(queue.size).toBe(0);
  });

  it("forcing an invalid payload through the raw client is rejected server-side", async () => {
    const backend = new FakeBackend();
    const client = new ApiClient("", "A1", backend.fetch);
    await expect(client.submit({
      sentence_id: "s1", labels: [0], irrelevant: true, comment: null,
    })).rejects.toThrow("Irrelevant is exclusive");
  });
});
