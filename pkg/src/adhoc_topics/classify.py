"""Thresholded multi-label prediction and the multi-seed evaluation harness.

Predictions come either from the native feed-forward baseline or from an
ingested score matrix produced by an external model. A topic is predicted when
its probability strictly exceeds the threshold (default 0.6); sentence-level
predictions can be aggregated to documents by union before evaluation.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .agreement import confusion_counts, macro_micro, prf1
from .labels import EMPTY_LABELS, NUM_TOPICS, LabelSet

DEFAULT_THRESHOLD = 0.6
THRESHOLD_GRID = tuple(round(0.3 + 0.05 * i, 2) for i in range(11))  # 0.3 .. 0.8


class ScoreValidationError(ValueError):
    """Scores outside [0, 1] or malformed score files."""


def predict(scores: np.ndarray, threshold: float = DEFAULT_THRESHOLD) -> list[LabelSet]:
    """Label sets per row; topic included iff its score > threshold (strict)."""
    scores = np.asarray(scores, dtype=float)
    if scores.ndim == 1:
        scores = scores[None, :]
    if scores.size and (scores.min() < 0.0 or scores.max() > 1.0):
        raise ScoreValidationError("scores must lie in [0, 1]")
    out = []
    for row in scores:
        out.append(LabelSet.from_ids(np.flatnonzero(row > threshold).tolist()))
    return out


def aggregate_predictions(item_labels: dict[str, LabelSet],
                          doc_of: dict[str, str]) -> dict[str, LabelSet]:
    """Union sentence predictions into document predictions."""
    out: dict[str, LabelSet] = {}
    for item, labels in item_labels.items():
        doc = doc_of[item]
        out[doc] = out.get(doc, EMPTY_LABELS) | labels
    return out


def export_scores(ids: list[str], scores: np.ndarray,
                  topic_names: list[str]) -> str:
    """Score matrix file: header of the 20 topic names, then id + 20 columns."""
    if len(topic_names) != NUM_TOPICS:
        raise ScoreValidationError(f"expected {NUM_TOPICS} topic names")
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["item_id"] + list(topic_names))
    for item, row in zip(ids, np.asarray(scores, dtype=float)):
        writer.writerow([item] + [repr(float(v)) for v in row])
    return buf.getvalue()


@dataclass(frozen=True)
class IngestedScores:
    ids: tuple[str, ...]
    matrix: np.ndarray
    rejected: tuple[tuple[int, str], ...]   # (line number, reason)


def ingest_external_scores(payload: str,
                           known_ids: set[str] | None = None) -> IngestedScores:
    """Parse and validate a score matrix; bad rows are rejected individually.

    Rejection reasons cover wrong column counts, values outside [0, 1],
    non-numeric cells, and ids missing from `known_ids` when supplied.
    """
    reader = csv.reader(io.StringIO(payload))
    header = next(reader, None)
    if header is None or len(header) != NUM_TOPICS + 1:
        raise ScoreValidationError(
            f"header must contain item_id plus {NUM_TOPICS} topic columns"
        )
    ids: list[str] = []
    rows: list[list[float]] = []
    rejected: list[tuple[int, str]] = []
    for line_number, row in enumerate(reader, start=2):
        if not row:
            continue
        if len(row) != NUM_TOPICS + 1:
            rejected.append((line_number, f"expected {NUM_TOPICS + 1} columns, got {len(row)}"))
            continue
        item = row[0]
        if known_ids is not None and item not in known_ids:
            rejected.append((line_number, f"unknown id {item!r}"))
            continue
        try:
            values = [float(v) for v in row[1:]]
        except ValueError:
            rejected.append((line_number, "non-numeric score"))
            continue
        bad = [v for v in values if not 0.0 <= v <= 1.0]
        if bad:
            rejected.append((line_number, f"score {bad[0]} outside [0, 1]"))
            continue
        ids.append(item)
        rows.append(values)
    matrix = np.asarray(rows, dtype=float) if rows else np.zeros((0, NUM_TOPICS))
    return IngestedScores(ids=tuple(ids), matrix=matrix, rejected=tuple(rejected))


def threshold_sweep(scores_by_item: dict[str, np.ndarray],
                    gold: dict[str, LabelSet],
                    grid=THRESHOLD_GRID) -> list[tuple[float, float, float]]:
    """Macro and micro F1 per candidate threshold, for picking the default.

    Returns (threshold, macro F1, micro F1) rows in grid order.
    """
    items = sorted(set(scores_by_item) & set(gold))
    if not items:
        raise ValueError("scores and gold share no items")
    matrix = np.vstack([scores_by_item[i] for i in items])
    rows = []
    for thr in grid:
        predicted = dict(zip(items, predict(matrix, thr)))
        counts = confusion_counts(predicted, gold, items)
        macro, micro = macro_micro(counts)
        rows.append((float(thr), macro[2], micro[2]))
    return rows


@dataclass(frozen=True)
class EvalReport:
    """Cross-seed evaluation summary.

    Per-topic precision/recall/F1 means and population stds across seeds,
    macro/micro metric means and stds, per-topic gold support, and the
    aggregation level tags.
    """

    per_topic_f1_mean: dict[int, float]
    per_topic_f1_std: dict[int, float]
    per_topic_precision_mean: dict[int, float]
    per_topic_precision_std: dict[int, float]
    per_topic_recall_mean: dict[int, float]
    per_topic_recall_std: dict[int, float]
    macro_mean: tuple[float, float, float]
    macro_std: tuple[float, float, float]
    micro_mean: tuple[float, float, float]
    micro_std: tuple[float, float, float]
    support: dict[int, int]
    level: str
    training_level: str
    n_seeds: int


def evaluate_multiseed(runs: list[dict[str, LabelSet]],
                       gold: dict[str, LabelSet],
                       level: str = "document",
                       training_level: str = "sentence") -> EvalReport:
    """Evaluate per-seed prediction maps against the gold labels.

    All runs must cover the same item set. Means and stds (population) are
    taken across seeds.
    """
    if not runs:
        raise ValueError("need at least one seed run")
    item_sets = {frozenset(r.keys()) for r in runs}
    if len(item_sets) != 1:
        raise ValueError("seed runs disagree on the evaluated item set")
    items = sorted(item_sets.pop() & set(gold))
    if not items:
        raise ValueError("predictions and gold share no items")

    support = {t: 0 for t in range(NUM_TOPICS)}
    for item in items:
        for t in gold[item]:
            support[t] += 1

    per_seed_topic = np.zeros((len(runs), NUM_TOPICS, 3))
    per_seed_macro = np.zeros((len(runs), 3))
    per_seed_micro = np.zeros((len(runs), 3))
    for s, run in enumerate(runs):
        counts = confusion_counts(run, gold, items)
        for t in range(NUM_TOPICS):
            per_seed_topic[s, t] = prf1(counts[t])
        macro, micro = macro_micro(counts)
        per_seed_macro[s] = macro
        per_seed_micro[s] = micro

    def stat(metric: int, reducer) -> dict[int, float]:
        return {t: float(reducer(per_seed_topic[:, t, metric]))
                for t in range(NUM_TOPICS)}

    return EvalReport(
        per_topic_f1_mean=stat(2, np.mean),
        per_topic_f1_std=stat(2, np.std),
        per_topic_precision_mean=stat(0, np.mean),
        per_topic_precision_std=stat(0, np.std),
        per_topic_recall_mean=stat(1, np.mean),
        per_topic_recall_std=stat(1, np.std),
        macro_mean=tuple(per_seed_macro.mean(axis=0)),
        macro_std=tuple(per_seed_macro.std(axis=0)),
        micro_mean=tuple(per_seed_micro.mean(axis=0)),
        micro_std=tuple(per_seed_micro.std(axis=0)),
        support=support,
        level=level,
        training_level=training_level,
        n_seeds=len(runs),
    )


def eval_report_csv(report: EvalReport, topic_names: list[str]) -> str:
    """Table with overall rows first, then topics by decreasing mean F1."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["level", "training_level", "row", "support",
                     "precision_mean", "precision_std",
                     "recall_mean", "recall_std", "f1_mean", "f1_std"])
    total = sum(report.support.values())
    for name, means, stds in (
        ("Avg. (Macro)", report.macro_mean, report.macro_std),
        ("Avg. (Micro)", report.micro_mean, report.micro_std),
    ):
        writer.writerow(
            [report.level, report.training_level, name, total]
            + [repr(float(v)) for pair in zip(means, stds) for v in pair]
        )
    order = sorted(range(NUM_TOPICS),
                   key=lambda t: (-report.per_topic_f1_mean[t], t))
    for t in order:
        writer.writerow([
            report.level, report.training_level, topic_names[t],
            report.support[t],
            repr(float(report.per_topic_precision_mean[t])),
            repr(float(report.per_topic_precision_std[t])),
            repr(float(report.per_topic_recall_mean[t])),
            repr(float(report.per_topic_recall_std[t])),
            repr(float(report.per_topic_f1_mean[t])),
            repr(float(report.per_topic_f1_std[t])),
        ])
    return buf.getvalue()
