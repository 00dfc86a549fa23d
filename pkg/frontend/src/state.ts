/**
 * Draft state for the labeling workbench.
 *
 * One announcement is open at a time; each sentence holds a draft label set,
 * an Irrelevant flag, and an optional comment. The Irrelevant-exclusivity
 * rule is mirrored here so an invalid payload can never be built client-side;
 * the server re-checks it regardless.
 */

import type { AnnouncementPayload, SubmitPayload } from "./types.js";
import { NUM_TOPICS } from "./types.js";

export interface SentenceDraft {
  labels: number[];          // sorted topic ids
  irrelevant: boolean;
  comment: string | null;
  submittedVersion: number;  // 0 = never submitted
}

export interface SessionDrafts {
  announcementId: string;
  sentences: Record<string, SentenceDraft>;
}

export function emptyDraft(): SentenceDraft {
  return { labels: [], irrelevant: false, comment: null, submittedVersion: 0 };
}

export function freshDrafts(announcement: AnnouncementPayload): SessionDrafts {
  const sentences: Record<string, SentenceDraft> = {};
  for (const s of announcement.sentences) {
    sentences[s.id] = emptyDraft();
  }
  return { announcementId: announcement.id, sentences };
}

function checkTopicId(topicId: number): void {
  if (!Number.isInteger(topicId) || topicId < 0 || topicId >= NUM_TOPICS) {
    throw new RangeError(`topic id out of range: ${topicId}`);
  }
}

/**
 * Toggle one topic on a sentence draft. Blocked while the sentence is marked
 * Irrelevant: the two are mutually exclusive and the toggle must not silently
 * clear the flag.
 */
export function toggleTopic(draft: SentenceDraft, topicId: number): SentenceDraft {
  checkTopicId(topicId);
  if (draft.irrelevant) {
    return draft;
  }
  const has = draft.labels.includes(topicId);
  const labels = has
    ? draft.labels.filter((t) => t !== topicId)
    : [...draft.labels, topicId].sort((a, b) => a - b);
  return { ...draft, labels };
}

/**
 * Toggle the Irrelevant marker. Switching it on clears any topic labels so
 * the draft can never hold both.
 */
export function toggleIrrelevant(draft: SentenceDraft): SentenceDraft {
  if (draft.irrelevant) {
    return { ...draft, irrelevant: false };
  }
  return { ...draft, irrelevant: true, labels: [] };
}

export function setComment(draft: SentenceDraft, comment: string): SentenceDraft {
  return { ...draft, comment: comment.trim() === "" ? null : comment };
}

/** Topic toggles are disabled exactly while Irrelevant is on. */
export function topicsDisabled(draft: SentenceDraft): boolean {
  return draft.irrelevant;
}

/**
 * Build the submit payload for one sentence. Throws if the draft violates the
 * exclusivity rule; with state transitions above that is unreachable, but the
 * guard keeps raw edits (e.g. restored storage) honest too.
 */
export function buildPayload(sentenceId: string, draft: SentenceDraft): SubmitPayload {
  if (draft.irrelevant && draft.labels.length > 0) {
    throw new Error(
      "draft violates the exclusivity rule: the Irrelevant marker cannot be " +
      "combined with topic labels",
    );
  }
  for (const t of draft.labels) {
    checkTopicId(t);
  }
  return {
    sentence_id: sentenceId,
    labels: [...draft.labels],
    irrelevant: draft.irrelevant,
    comment: draft.comment,
  };
}

/** Record a server acknowledgement; versions only move forward. */
export function acknowledge(draft: SentenceDraft, version: number): SentenceDraft {
  return { ...draft, submittedVersion: Math.max(draft.submittedVersion, version) };
}

/** Keyboard shortcut mapping: 1..9, 0, then q..j for topics 10..19. */
const SHORTCUT_ORDER = "1234567890qwertzuiop";

export function shortcutForTopic(topicId: number): string | null {
  return topicId >= 0 && topicId < SHORTCUT_ORDER.length
    ? SHORTCUT_ORDER[topicId]
    : null;
}

export function topicForShortcut(key: string): number | null {
  const idx = SHORTCUT_ORDER.indexOf(key.toLowerCase());
  return idx >= 0 ? idx : null;
}
