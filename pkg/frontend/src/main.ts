/**
 * Entry point: reads the annotator token and backend URL from the query
 * string (`?token=A1&api=http://127.0.0.1:8008`), then mounts the labeling
 * workbench and the review dashboard tab.
 */

import { ApiClient, SubmitQueue } from "./api.js";
import { renderDashboard } from "./dashboard.js";
import { Workbench } from "./workbench.js";

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const token = params.get("token") ?? "";
  const base = params.get("api") ?? "";
  const app = document.getElementById("app")!;
  if (!token) {
    app.innerHTML = `<div class="error">Append ?token=&lt;annotator id&gt; ` +
      `to the URL to start a session.</div>`;
    return;
  }

  const fetchLike = (url: string, init?: Parameters<typeof fetch>[1]) =>
    fetch(url, init);
  const client = new ApiClient(base, token, fetchLike);
  const queue = new SubmitQueue(client);

  const labelTab = document.getElementById("tab-label")!;
  const reviewTab = document.getElementById("tab-review")!;
  const labelView = document.getElementById("view-label")!;
  const reviewView = document.getElementById("view-review")!;

  const workbench = new Workbench(labelView as HTMLElement, client, queue,
                                  window.localStorage, token,
                                  (await client.taxonomy()).topics);
  await workbench.start();

  window.addEventListener("keydown", (event) => {
    const target = event.target as HTMLElement | null;
    if (target && target.tagName === "INPUT") {
      return;
    }
    workbench.onKey(event.key);
  });
  window.addEventListener("online", () => void workbench.flushQueue());

  async function showReview(): Promise<void> {
    labelView.hidden = true;
    reviewView.hidden = false;
    try {
      reviewView.innerHTML = renderDashboard(await client.dashboardText());
    } catch (error) {
      reviewView.innerHTML = `<div class="empty-state">` +
        `${String(error)}</div>`;
    }
  }

  labelTab.addEventListener("click", () => {
    reviewView.hidden = true;
    labelView.hidden = false;
  });
  reviewTab.addEventListener("click", () => void showReview());
}

void boot();
