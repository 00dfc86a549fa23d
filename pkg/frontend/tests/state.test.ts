import { describe, expect, it } from "vitest";

import {
  acknowledge,
  buildPayload,
  emptyDraft,
  freshDrafts,
  setComment,
  shortcutForTopic,
  toggleIrrelevant,
  toggleTopic,
  topicForShortcut,
  topicsDisabled,
} from "../src/state.js";

describe("draft transitions", () => {
  it("toggles topics on and off, keeping ids sorted", () => {
    let draft = emptyDraft();
    draft = toggleTopic(draft, 5);
    draft = toggleTopic(draft, 1);
    expect(draft.labels).toEqual([1, 5]);
    draft = toggleTopic(draft, 5);
    expect(draft.labels).toEqual([1]);
  });

  it("rejects out-of-range topic ids", () => {
    expect(() => toggleTopic(emptyDraft(), 20)).toThrow(RangeError);
    expect(() => toggleTopic(emptyDraft(), -1)).toThrow(RangeError);
  });

  it("turning Irrelevant on clears topic labels", () => {
    let draft = toggleTopic(emptyDraft(), 3);
    draft = toggleIrrelevant(draft);
    expect(draft.irrelevant).toBe(true);
    expect(draft.labels).toEqual([]);
  });

  it("disables topic toggles while Irrelevant is on", () => {
    let draft = toggleIrrelevant(emptyDraft());
    expect(topicsDisabled(draft)).toBe(true);
    const unchanged = toggleTopic(draft, 2);
    expect(unchanged.labels).toEqual([]);
    draft = toggleIrrelevant(draft);
    expect(topicsDisabled(draft)).toBe(false);
    expect(toggleTopic(draft, 2).labels).toEqual([2]);
  });

  it("empty label sets are legal submissions", () => {
    const payload = buildPayload("s1", emptyDraft());
    expect(payload).toEqual({
      sentence_id: "s1", labels: [], irrelevant: false, comment: null,
    });
  });

  it("never builds a payload violating the exclusivity rule", () => {
    // drive random toggle sequences; every reachable draft must serialize
    let seed = 42;
    const rand = () => {
      seed = (seed * 1103515245 + 12345) % 2147483648;
      return seed / 2147483648;
    };
    for (let run = 0; run < 200; run += 1) {
      let draft = emptyDraft();
      for (let step = 0; step < 30; step += 1) {
        if (rand() < 0.25) {
          draft = toggleIrrelevant(draft);
        } else {
          draft = toggleTopic(draft, Math.floor(rand() * 20));
        }
      }
      const payload = buildPayload("s", draft);
      expect(payload.irrelevant && payload.labels.length > 0).toBe(false);
    }
  });

  it("refuses hand-crafted invalid drafts", () => {
    const bad = { labels: [4], irrelevant: true, comment: null, submittedVersion: 0 };
    expect(() => buildPayload("s1", bad)).toThrow(/exclusivity/);
  });

  it("comments survive and blank comments become null", () => {
    let draft = setComment(emptyDraft(), "unsure about Guidance");
    expect(draft.comment).toBe("unsure about Guidance");
    draft = setComment(draft, "   ");
    expect(draft.comment).toBeNull();
  });

  it("acknowledged versions only move forward", () => {
    let draft = acknowledge(emptyDraft(), 3);
    draft = acknowledge(draft, 2);
    expect(draft.submittedVersion).toBe(3);
  });
});

describe("fresh drafts", () => {
  it("creates one empty draft per sentence", () => {
    const drafts = freshDrafts({
      id: "a1",
      sentences: [
        { id: "a1:0", ordinal: 0, text: "x" },
        { id: "a1:1", ordinal: 1, text: "y" },
      ],
    });
    expect(Object.keys(drafts.sentences)).toEqual(["a1:0", "a1:1"]);
    expect(drafts.sentences["a1:0"].labels).toEqual([]);
  });
});

describe("keyboard shortcuts", () => {
  it("maps all 20 topics to distinct keys", () => {
    const keys = new Set<string>();
    for (let t = 0; t < 20; t += 1) {
      const key = shortcutForTopic(t);
      expect(key).not.toBeNull();
      keys.add(key!);
      expect(topicForShortcut(key!)).toBe(t);
    }
    expect(keys.size).toBe(20);
  });

  it("returns null for unmapped keys", () => {
    expect(topicForShortcut("+")).toBeNull();
  });
});
