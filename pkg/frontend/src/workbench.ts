/**
 * Labeling workbench view: one announcement at a time, one row per sentence
 * with the 20 topic toggles, the Irrelevant toggle, and a comment field.
 *
 * Edits autosave to storage immediately; submits go through the offline queue
 * and server rejections highlight the offending sentence inline. A sentence
 * with the Irrelevant marker has its topic toggles disabled, and the focused
 * sentence responds to per-topic keyboard shortcuts.
 */

import { ApiClient, SubmitQueue } from "./api.js";
import {
  SentenceDraft,
  SessionDrafts,
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
} from "./state.js";
import { KeyValueStore, clearDrafts, loadDrafts, saveDrafts } from "./storage.js";
import { escapeHtml } from "./dashboard.js";
import type { AnnouncementPayload, Progress, Topic } from "./types.js";

export class Workbench {
  private drafts: SessionDrafts | null = null;
  private announcement: AnnouncementPayload | null = null;
  private progress: Progress | null = null;
  private focusedSentence: string | null = null;
  private errors = new Map<string, string>();

  constructor(
    private readonly root: HTMLElement,
    private readonly client: ApiClient,
    private readonly queue: SubmitQueue,
    private readonly store: KeyValueStore,
    private readonly token: string,
    private readonly topics: Topic[],
  ) {}

  async start(): Promise<void> {
    const next = await this.client.next();
    this.progress = next.progress;
    this.announcement = next.announcement;
    if (next.announcement) {
      const restored = loadDrafts(this.store, this.token);
      this.drafts =
        restored && restored.announcementId === next.announcement.id
          ? restored
          : freshDrafts(next.announcement);
      this.autosave();
    } else {
      this.drafts = null;
    }
    this.render();
  }

  private draft(sentenceId: string): SentenceDraft {
    return this.drafts?.sentences[sentenceId] ?? emptyDraft();
  }

  private update(sentenceId: string, next: SentenceDraft): void {
    if (!this.drafts) {
      return;
    }
    this.drafts.sentences[sentenceId] = next;
    this.autosave();
    this.render();
  }

  private autosave(): void {
    if (this.drafts) {
      saveDrafts(this.store, this.token, this.drafts);
    }
  }

  onToggleTopic(sentenceId: string, topicId: number): void {
    this.update(sentenceId, toggleTopic(this.draft(sentenceId), topicId));
  }

  onToggleIrrelevant(sentenceId: string): void {
    this.update(sentenceId, toggleIrrelevant(this.draft(sentenceId)));
  }

  onComment(sentenceId: string, comment: string): void {
    if (!this.drafts) {
      return;
    }
    this.drafts.sentences[sentenceId] = setComment(this.draft(sentenceId), comment);
    this.autosave();
  }

  onKey(key: string): void {
    if (!this.focusedSentence) {
      return;
    }
    if (key === "i") {
      this.onToggleIrrelevant(this.focusedSentence);
      return;
    }
    const topic = topicForShortcut(key);
    if (topic !== null && topic < this.topics.length) {
      this.onToggleTopic(this.focusedSentence, topic);
    }
  }

  /** Submit every sentence of the open announcement, then advance. */
  async submitAnnouncement(): Promise<void> {
    if (!this.announcement || !this.drafts) {
      return;
    }
    this.errors.clear();
    let blocked = false;
    for (const sentence of this.announcement.sentences) {
      const draft = this.draft(sentence.id);
      const outcome = await this.queue.submit(buildPayload(sentence.id, draft));
      if (outcome.kind === "accepted") {
        this.drafts.sentences[sentence.id] = acknowledge(draft, outcome.version);
      } else if (outcome.kind === "rejected") {
        this.errors.set(sentence.id, outcome.detail);
        blocked = true;
      }
      // queued submissions stay pending; flushQueue() retries them
    }
    this.autosave();
    if (blocked) {
      this.render();
      return;
    }
    if (this.queue.size === 0) {
      clearDrafts(this.store, this.token);
      await this.start();
    } else {
      this.render();
    }
  }

  /** Retry queued submissions after connectivity returns. */
  async flushQueue(): Promise<void> {
    const outcomes = await this.queue.flush();
    if (this.drafts) {
      for (const [sentenceId, outcome] of outcomes) {
        if (outcome.kind === "accepted") {
          this.drafts.sentences[sentenceId] =
            acknowledge(this.draft(sentenceId), outcome.version);
        } else if (outcome.kind === "rejected") {
          this.errors.set(sentenceId, outcome.detail);
        }
      }
      this.autosave();
    }
    this.render();
  }

  render(): void {
    if (!this.announcement) {
      this.root.innerHTML = `
        <div class="empty-state">
          <h2>All assigned announcements are labeled.</h2>
          ${this.renderProgress()}
        </div>`;
      return;
    }
    const rows = this.announcement.sentences
      .map((s) => this.renderSentence(s.id, s.ordinal, s.text))
      .join("");
    const queued = this.queue.size > 0
      ? `<div class="banner offline">${this.queue.size} submission(s) queued ` +
        `offline. <button data-action="retry">Retry now</button></div>`
      : "";
    this.root.innerHTML = `
      ${queued}
      <header>
        <h2>Announcement ${escapeHtml(this.announcement.id)}</h2>
        ${this.renderProgress()}
      </header>
      <div class="sentences">${rows}</div>
      <footer>
        <button class="submit" data-action="submit">Submit announcement</button>
      </footer>`;
    this.bind();
  }

  private renderProgress(): string {
    if (!this.progress) {
      return "";
    }
    const { labeled, assigned, remaining } = this.progress;
    return `<div class="progress">${labeled} / ${assigned} sentences labeled, ` +
      `${remaining} remaining</div>`;
  }

  private renderSentence(id: string, ordinal: number, text: string): string {
    const draft = this.draft(id);
    const disabled = topicsDisabled(draft);
    const error = this.errors.get(id);
    const toggles = this.topics.map((topic) => {
      const active = draft.labels.includes(topic.id);
      const key = shortcutForTopic(topic.id);
      return `<button class="topic${active ? " active" : ""}"
        data-sentence="${escapeHtml(id)}" data-topic="${topic.id}"
        title="${escapeHtml(topic.description)}${key ? ` [${key}]` : ""}"
        ${disabled ? "disabled" : ""}>${escapeHtml(topic.name)}</button>`;
    }).join("");
    return `
    <div class="sentence${error ? " rejected" : ""}" data-sentence="${escapeHtml(id)}"
         tabindex="0">
      <p class="text"><span class="ordinal">${ordinal}</span> ${escapeHtml(text)}</p>
      <div class="toggles">
        ${toggles}
        <button class="irrelevant${draft.irrelevant ? " active" : ""}"
          data-action="irrelevant" data-sentence="${escapeHtml(id)}"
          title="not part of the announcement core [i]">Irrelevant</button>
      </div>
      <input class="comment" data-sentence="${escapeHtml(id)}"
             placeholder="comment when unsure"
             value="${escapeHtml(draft.comment ?? "")}">
      ${error ? `<div class="inline-error">${escapeHtml(error)}</div>` : ""}
      ${draft.submittedVersion > 0
        ? `<div class="version">saved as version ${draft.submittedVersion}</div>`
        : ""}
    </div>`;
  }

  private bind(): void {
    this.root.querySelectorAll<HTMLButtonElement>("button.topic").forEach((el) => {
      el.addEventListener("click", () => {
        this.onToggleTopic(el.dataset.sentence!, Number(el.dataset.topic));
      });
    });
    this.root.querySelectorAll<HTMLButtonElement>(
      "button[data-action='irrelevant']",
    ).forEach((el) => {
      el.addEventListener("click", () => {
        this.onToggleIrrelevant(el.dataset.sentence!);
      });
    });
    this.root.querySelectorAll<HTMLInputElement>("input.comment").forEach((el) => {
      el.addEventListener("change", () => {
        this.onComment(el.dataset.sentence!, el.value);
      });
    });
    this.root.querySelectorAll<HTMLElement>(".sentence").forEach((el) => {
      el.addEventListener("focusin", () => {
        this.focusedSentence = el.dataset.sentence ?? null;
      });
    });
    this.root.querySelector("button[data-action='submit']")
      ?.addEventListener("click", () => void this.submitAnnouncement());
    this.root.querySelector("button[data-action='retry']")
      ?.addEventListener("click", () => void this.flushQueue());
  }
}
