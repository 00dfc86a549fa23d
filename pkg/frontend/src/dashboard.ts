/**
 * Review dashboard renderer: annotator metrics, per-topic agreement with band
 * colors, and the top-10 co-occurrence chart.
 *
 * Every displayed value is lifted verbatim from the fetched export (see
 * rawjson.ts); nothing is recomputed or reformatted client-side. A staleness
 * banner appears when the caller knows the export predates newer annotations.
 */

import { bandColor } from "./bands.js";
import {
  RawValue,
  asString,
  has,
  itemsOf,
  keysOf,
  parseRaw,
  rawNumber,
} from "./rawjson.js";

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function metricCell(doc: RawValue, ...path: (string | number)[]): string {
  return escapeHtml(rawNumber(doc, ...path));
}

function annotatorTable(doc: RawValue, level: string): string {
  if (!has(doc, "annotator_metrics", level)) {
    return "";
  }
  const annotators = keysOf(doc, "annotator_metrics", level);
  const rows = annotators.map((annotator) => {
    const base = ["annotator_metrics", level, annotator] as const;
    return `<tr><td>${escapeHtml(annotator)}</td>` +
      `<td>${metricCell(doc, ...base, "precision")}</td>` +
      `<td>${metricCell(doc, ...base, "recall")}</td>` +
      `<td>${metricCell(doc, ...base, "f1")}</td>` +
      `<td>${metricCell(doc, ...base, "num")}</td></tr>`;
  });
  return `
  <section class="panel">
    <h3>Annotator performance (${escapeHtml(level)} level)</h3>
    <table>
      <thead><tr><th>annotator</th><th>precision</th><th>recall</th><th>F1</th><th>num</th></tr></thead>
      <tbody>${rows.join("")}</tbody>
    </table>
  </section>`;
}

function kappaTable(doc: RawValue, level: string): string {
  if (!has(doc, "fleiss_kappa", level)) {
    return "";
  }
  const topics = keysOf(doc, "fleiss_kappa", level);
  const rows = topics.map((topic) => {
    const band = asString(doc, "fleiss_kappa", level, topic, "band");
    const color = bandColor(band);
    return `<tr><td>${escapeHtml(topic)}</td>` +
      `<td>${metricCell(doc, "fleiss_kappa", level, topic, "kappa")}</td>` +
      `<td><span class="band" style="background:${color}">` +
      `${escapeHtml(band)}</span></td></tr>`;
  });
  let average = "";
  if (has(doc, "fleiss_kappa_average", level)) {
    const band = asString(doc, "fleiss_kappa_average", level, "band");
    average = `<tr class="avg"><td>Avg.</td>` +
      `<td>${metricCell(doc, "fleiss_kappa_average", level, "kappa")}</td>` +
      `<td><span class="band" style="background:${bandColor(band)}">` +
      `${escapeHtml(band)}</span></td></tr>`;
  }
  return `
  <section class="panel">
    <h3>Inter-annotator agreement (${escapeHtml(level)} level)</h3>
    <table>
      <thead><tr><th>topic</th><th>kappa</th><th>band</th></tr></thead>
      <tbody>${rows.join("")}${average}</tbody>
    </table>
  </section>`;
}

function cooccurrenceChart(doc: RawValue): string {
  if (!has(doc, "cooccurrence_top10")) {
    return "";
  }
  const pairs = itemsOf(doc, "cooccurrence_top10");
  if (pairs.length === 0) {
    return "";
  }
  const counts = pairs.map((p) => Number(rawNumber(p, "count")));
  const max = Math.max(...counts, 1);
  const bars = pairs.map((pair) => {
    const a = asString(pair, "topic_a");
    const b = asString(pair, "topic_b");
    const raw = rawNumber(pair, "count");
    const width = (100 * Number(raw)) / max;
    return `<div class="bar-row">` +
      `<span class="bar-label">${escapeHtml(a)} &amp; ${escapeHtml(b)}</span>` +
      `<span class="bar" style="width:${width.toFixed(1)}%"></span>` +
      `<span class="bar-count">${escapeHtml(raw)}</span></div>`;
  });
  return `
  <section class="panel">
    <h3>Top co-occurring topic pairs (document level)</h3>
    <div class="bars">${bars.join("")}</div>
  </section>`;
}

export interface DashboardOptions {
  stale?: boolean;
}

/** Render the full dashboard from the raw export text. */
export function renderDashboard(exportText: string,
                                options: DashboardOptions = {}): string {
  let doc: RawValue;
  try {
    doc = parseRaw(exportText);
  } catch (error) {
    return `<div class="error">could not parse the agreement export: ` +
      `${escapeHtml(String(error))}</div>`;
  }
  if (doc.kind === "object" && doc.entries.size === 0) {
    return `<div class="empty-state">No agreement export yet. Run the ` +
      `agreement stage and reload.</div>`;
  }
  const banner = options.stale
    ? `<div class="banner stale">This export is stale: newer annotations ` +
      `exist. Re-run the agreement stage.</div>`
    : "";
  const sections = [
    annotatorTable(doc, "sentence"),
    annotatorTable(doc, "document"),
    kappaTable(doc, "sentence"),
    kappaTable(doc, "document"),
    cooccurrenceChart(doc),
  ].filter((s) => s !== "");
  if (sections.length === 0) {
    return `${banner}<div class="empty-state">The agreement export holds no ` +
      `metric tables.</div>`;
  }
  return banner + sections.join("\n");
}
