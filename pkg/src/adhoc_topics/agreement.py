"""Annotator performance and inter-annotator agreement statistics.

Each topic is treated as its own binary labeled/not-labeled dataset.
Performance against the gold standard uses precision, recall, and F1 with the
0/0 -> 0 convention; agreement uses the binary multi-rater kappa statistic
kappa = (p_a - p_e) / (1 - p_e) with pooled chance marginals, interpreted with
the conventional qualitative bands.

All functions here are pure over exported annotation matrices and may run in
parallel freely.
"""

from __future__ import annotations

from dataclasses import dataclass
from statistics import fmean

from .labels import NUM_TOPICS, LabelSet

KAPPA_BANDS = (
    "Less than chance agreement",
    "Slight agreement",
    "Fair agreement",
    "Moderate agreement",
    "Substantial agreement",
    "Almost perfect agreement",
)


class DegenerateAgreementError(ValueError):
    """Chance agreement is 1 while observed agreement is not; kappa undefined."""


@dataclass(frozen=True)
class BinaryCounts:
    tp: int = 0
    fp: int = 0
    fn: int = 0
    tn: int = 0

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise ValueError("confusion counts must be non-negative")

    def __add__(self, other: "BinaryCounts") -> "BinaryCounts":
        return BinaryCounts(
            self.tp + other.tp, self.fp + other.fp,
            self.fn + other.fn, self.tn + other.tn,
        )

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn


def prf1(counts: BinaryCounts) -> tuple[float, float, float]:
    """Precision, recall, F1; 0/0 cases evaluate to 0 so macro averages stay
    defined for topics without support."""
    p = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else 0.0
    r = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else 0.0
    f1 = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f1


def macro_micro(per_topic_counts: list[BinaryCounts]) -> tuple[tuple[float, float, float],
                                                               tuple[float, float, float]]:
    """Macro = unweighted mean of per-topic metrics; micro = metrics of the
    element-wise summed counts (pooled-counts definition)."""
    if not per_topic_counts:
        raise ValueError("need at least one topic")
    per_topic = [prf1(c) for c in per_topic_counts]
    macro = tuple(fmean(m[i] for m in per_topic) for i in range(3))
    pooled = BinaryCounts()
    for c in per_topic_counts:
        pooled = pooled + c
    return macro, prf1(pooled)


def confusion_counts(predicted: dict[str, LabelSet], gold: dict[str, LabelSet],
                     items=None) -> list[BinaryCounts]:
    """Per-topic binary counts of `predicted` against `gold` over `items`
    (default: intersection of the two key sets)."""
    if items is None:
        items = sorted(set(predicted) & set(gold))
    tallies = [[0, 0, 0, 0] for _ in range(NUM_TOPICS)]
    for item in items:
        p = predicted[item]
        g = gold[item]
        for t in range(NUM_TOPICS):
            has_p = t in p
            has_g = t in g
            if has_p and has_g:
                tallies[t][0] += 1
            elif has_p:
                tallies[t][1] += 1
            elif has_g:
                tallies[t][2] += 1
            else:
                tallies[t][3] += 1
    return [BinaryCounts(*row) for row in tallies]


@dataclass(frozen=True)
class PerformanceReport:
    """Annotator-vs-gold metrics at one aggregation level.

    per_annotator: annotator -> (macro precision, recall, f1) over scored topics.
    per_topic: topic id -> (precision, recall, f1) averaged over annotators.
    counts: (annotator, topic id) -> BinaryCounts.
    scored_topics: topic ids that survived the coverage filter.
    n_items: number of scored items per annotator.
    """

    per_annotator: dict[str, tuple[float, float, float]]
    per_topic: dict[int, tuple[float, float, float]]
    counts: dict[tuple[str, int], BinaryCounts]
    scored_topics: tuple[int, ...]
    n_items: dict[str, int]


def annotator_performance(annotations: dict[str, dict[str, LabelSet]],
                          gold: dict[str, LabelSet],
                          min_topic_support: int = 0,
                          topic_support: dict[int, int] | None = None) -> PerformanceReport:
    """Score each annotator against the gold standard on their shared items.

    `annotations` maps annotator -> item -> labels; items are sentences or
    documents depending on the caller's aggregation. With
    `min_topic_support` > 0, topics whose gold support falls below the cutoff
    are excluded (the phase-2 coverage filter). `topic_support` overrides the
    support counts, e.g. with sentence-level counts when scoring documents.
    """
    if not annotations:
        raise ValueError("no annotations supplied")
    shared_any = set()
    for items in annotations.values():
        shared_any |= set(items) & set(gold)
    if not shared_any:
        raise ValueError("annotations and gold standard share no items")

    if topic_support is None:
        topic_support = {t: 0 for t in range(NUM_TOPICS)}
        for ls in gold.values():
            for t in ls:
                topic_support[t] += 1
    # Topics absent from the gold standard are never scored; their 0/0 rows
    # would only dilute the macro averages.
    cutoff = max(1, min_topic_support)
    scored_topics = tuple(
        t for t in range(NUM_TOPICS) if topic_support.get(t, 0) >= cutoff
    )
    if not scored_topics:
        raise ValueError("coverage filter removed every topic")

    counts: dict[tuple[str, int], BinaryCounts] = {}
    per_annotator: dict[str, tuple[float, float, float]] = {}
    n_items: dict[str, int] = {}
    for annotator in sorted(annotations):
        items = sorted(set(annotations[annotator]) & set(gold))
        if not items:
            continue
        by_topic = confusion_counts(annotations[annotator], gold, items)
        for t in scored_topics:
            counts[(annotator, t)] = by_topic[t]
        metrics = [prf1(by_topic[t]) for t in scored_topics]
        per_annotator[annotator] = tuple(
            fmean(m[i] for m in metrics) for i in range(3)
        )
        n_items[annotator] = len(items)

    per_topic: dict[int, tuple[float, float, float]] = {}
    for t in scored_topics:
        rows = [prf1(counts[(a, t)]) for a in per_annotator if (a, t) in counts]
        per_topic[t] = tuple(fmean(r[i] for r in rows) for i in range(3))

    return PerformanceReport(
        per_annotator=per_annotator,
        per_topic=per_topic,
        counts=counts,
        scored_topics=scored_topics,
        n_items=n_items,
    )


def fleiss_kappa(item_ratings: list[int], n_raters: int) -> float:
    """Binary multi-rater kappa from per-item positive-rating counts.

    Every item must be rated by exactly `n_raters` >= 2; panels with variable
    rater counts are rejected. Per-item agreement is
    [n1(n1-1) + n0(n0-1)] / [n(n-1)], chance agreement is q^2 + (1-q)^2 with q
    the overall positive proportion.
    """
    if n_raters < 2:
        raise ValueError(f"need at least 2 raters, got {n_raters}")
    if not item_ratings:
        raise ValueError("no items to rate")
    positives = list(item_ratings)
    for count in positives:
        if not 0 <= count <= n_raters:
            raise ValueError(
                f"item rating {count} outside [0, {n_raters}] (fixed panel required)"
            )
    n = n_raters
    per_item = [
        (k * (k - 1) + (n - k) * (n - k - 1)) / (n * (n - 1)) for k in positives
    ]
    p_a = fmean(per_item)
    q = sum(positives) / (len(positives) * n)
    p_e = q * q + (1 - q) * (1 - q)
    if p_e == 1.0:
        if p_a == 1.0:
            return 1.0
        raise DegenerateAgreementError(
            "all ratings fall in one category but items disagree"
        )
    return (p_a - p_e) / (1 - p_e)


def fleiss_kappa_from_matrix(matrix: list[list[int]]) -> float:
    """Kappa from a full items x raters 0/1 matrix; enforces the fixed panel."""
    if not matrix:
        raise ValueError("empty rating matrix")
    widths = {len(row) for row in matrix}
    if len(widths) != 1:
        raise ValueError(f"variable rater counts rejected: {sorted(widths)}")
    n_raters = widths.pop()
    return fleiss_kappa([sum(row) for row in matrix], n_raters)


def cohen_kappa(ratings_a: list[int], ratings_b: list[int]) -> float:
    """Two-rater kappa with per-rater chance marginals (binary data)."""
    if len(ratings_a) != len(ratings_b) or not ratings_a:
        raise ValueError("need two equal-length, non-empty rating vectors")
    n = len(ratings_a)
    p_o = sum(a == b for a, b in zip(ratings_a, ratings_b)) / n
    pa1 = sum(ratings_a) / n
    pb1 = sum(ratings_b) / n
    p_e = pa1 * pb1 + (1 - pa1) * (1 - pb1)
    if p_e == 1.0:
        if p_o == 1.0:
            return 1.0
        raise DegenerateAgreementError("degenerate marginals with disagreement")
    return (p_o - p_e) / (1 - p_e)


def interpret_kappa(kappa: float) -> str:
    """Qualitative agreement band for kappa in [-1, 1].

    Values in [0, 0.01) fall into "Slight agreement" and 1.0 into "Almost
    perfect agreement"; the published bands leave those edges open.
    """
    if not -1.0 <= kappa <= 1.0:
        raise ValueError(f"kappa out of range [-1, 1]: {kappa}")
    if kappa < 0:
        return KAPPA_BANDS[0]
    if kappa <= 0.20:
        return KAPPA_BANDS[1]
    if kappa <= 0.40:
        return KAPPA_BANDS[2]
    if kappa <= 0.60:
        return KAPPA_BANDS[3]
    if kappa <= 0.80:
        return KAPPA_BANDS[4]
    return KAPPA_BANDS[5]


@dataclass(frozen=True)
class KappaReport:
    """Per-topic kappa with qualitative bands and the across-topic average."""

    per_topic: dict[int, float]
    bands: dict[int, str]
    average: float
    average_band: str


def kappa_report(annotations: dict[str, dict[str, LabelSet]],
                 topics=None) -> KappaReport:
    """Per-topic kappa over the items every annotator rated.

    The rater panel is fixed: only items labeled by all annotators enter, and
    at least two annotators are required. `topics` restricts the report (e.g.
    after the coverage filter); defaults to all 20.
    """
    annotators = sorted(annotations)
    if len(annotators) < 2:
        raise ValueError("need at least 2 annotators for agreement")
    common = set(annotations[annotators[0]])
    for a in annotators[1:]:
        common &= set(annotations[a])
    if not common:
        raise ValueError("annotators share no items")
    items = sorted(common)
    if topics is None:
        topics = range(NUM_TOPICS)
    per_topic: dict[int, float] = {}
    bands: dict[int, str] = {}
    for t in topics:
        ratings = [
            sum(1 for a in annotators if t in annotations[a][item]) for item in items
        ]
        k = fleiss_kappa(ratings, len(annotators))
        per_topic[t] = k
        bands[t] = interpret_kappa(k)
    avg = fmean(per_topic.values())
    return KappaReport(per_topic=per_topic, bands=bands, average=avg,
                       average_band=interpret_kappa(max(-1.0, min(1.0, avg))))
