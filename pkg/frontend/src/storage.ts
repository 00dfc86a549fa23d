/**
 * Draft autosave. Every edit persists the open announcement's drafts under a
 * per-annotator key so a reload (or crash) resumes exactly where the session
 * stopped; submitted sentences keep their acknowledged version.
 */

import type { SessionDrafts } from "./state.js";

/** The subset of window.localStorage the app relies on; injectable in tests. */
export interface KeyValueStore {
  getItem(key: string): string | null;
  setItem(key: string, value: string): void;
  removeItem(key: string): void;
}

const PREFIX = "adhoc-topics/drafts/";

function key(annotatorToken: string): string {
  return PREFIX + annotatorToken;
}

export function saveDrafts(store: KeyValueStore, annotatorToken: string,
                           drafts: SessionDrafts): void {
  store.setItem(key(annotatorToken), JSON.stringify(drafts));
}

export function loadDrafts(store: KeyValueStore,
                           annotatorToken: string): SessionDrafts | null {
  const raw = store.getItem(key(annotatorToken));
  if (raw === null) {
    return null;
  }
  try {
    const parsed = JSON.parse(raw) as SessionDrafts;
    if (typeof parsed.announcementId !== "string" || !parsed.sentences) {
      return null;
    }
    return parsed;
  } catch {
    return null;
  }
}

export function clearDrafts(store: KeyValueStore, annotatorToken: string): void {
  store.removeItem(key(annotatorToken));
}

/** In-memory store for tests and non-browser environments. */
export class MemoryStore implements KeyValueStore {
  private data = new Map<string, string>();

  getItem(k: string): string | null {
    return this.data.has(k) ? this.data.get(k)! : null;
  }

  setItem(k: string, v: string): void {
    this.data.set(k, v);
  }

  removeItem(k: string): void {
    this.data.delete(k);
  }
}
