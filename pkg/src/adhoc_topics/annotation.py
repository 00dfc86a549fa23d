"""Annotation session design, balanced allocation, and label persistence.

Phase 1 shares a gold-labeled set across all annotators; phase 2 adds large
per-annotator unique pools balanced so every topic reaches a target number of
labeled sentences; phase 3 repeats the allocation restricted to under-covered
topics. Records are keyed by (sentence, annotator); overwrites are versioned,
and the Irrelevant marker is mutually exclusive with topic labels.
"""

from __future__ import annotations

import csv
import io
import math
import threading
import time
from dataclasses import dataclass, field

import numpy as np

from .corpus import Corpus, aggregate_to_document
from .labels import EMPTY_LABELS, NUM_TOPICS, LabelSet


class AnnotationValidationError(ValueError):
    """Record violates a labeling rule."""


class NotFoundError(KeyError):
    """Unknown sentence or annotator."""


class AllocationError(ValueError):
    """Allocation preconditions violated (for example missing gold coverage)."""


class AllocationShortage(AllocationError):
    """Not enough candidate announcements for one or more topics."""

    def __init__(self, shortages: dict[int, tuple[int, int]]):
        self.shortages = shortages
        detail = "; ".join(
            f"topic {t}: need {need}, have {have}"
            for t, (need, have) in sorted(shortages.items())
        )
        super().__init__(f"insufficient candidate announcements: {detail}")


@dataclass(frozen=True)
class Annotator:
    id: str
    display_name: str = ""
    is_instructor: bool = False


@dataclass(frozen=True)
class GoldStandard:
    labels: dict[str, LabelSet]
    provenance: tuple[str, ...] = ()

    def __contains__(self, sentence_id: str) -> bool:
        return sentence_id in self.labels


@dataclass(frozen=True)
class PhasePlan:
    phase: int
    shared_announcements: tuple[str, ...]
    unique_assignments: dict[str, tuple[str, ...]]
    per_topic_target: int

    def assigned_to(self, annotator_id: str) -> tuple[str, ...]:
        return self.shared_announcements + self.unique_assignments.get(annotator_id, ())


@dataclass(frozen=True)
class AnnotationRecord:
    sentence_id: str
    annotator_id: str
    labels: LabelSet
    irrelevant: bool = False
    comment: str | None = None
    recorded_at: float = 0.0
    version: int = 1

    def __post_init__(self) -> None:
        if self.irrelevant and self.labels:
            raise AnnotationValidationError(
                "the Irrelevant marker cannot be combined with topic labels; "
                "it is not a topic"
            )


def topic_rates(corpus: Corpus, gold: GoldStandard,
                topics: list[int] | None = None) -> dict[int, float]:
    """Mean labeled-sentences-per-announcement for each topic over gold
    announcements that contain the topic. Undefined rates are an error."""
    wanted = sorted(topics) if topics is not None else list(range(NUM_TOPICS))
    per_ann_counts: dict[str, list[int]] = {}
    for ann in corpus.announcements:
        counts = [0] * NUM_TOPICS
        touched = False
        for s in ann.sentences:
            if s.id in gold.labels:
                touched = True
                for t in gold.labels[s.id]:
                    counts[t] += 1
        if touched:
            per_ann_counts[ann.id] = counts
    rates: dict[int, float] = {}
    for t in wanted:
        contributions = [c[t] for c in per_ann_counts.values() if c[t] > 0]
        if not contributions:
            raise AllocationError(
                f"phase-1 gold has no labeled sentence for topic {t}; "
                "its sentence rate is undefined"
            )
        rates[t] = sum(contributions) / len(contributions)
    return rates


def allocate_balanced(corpus: Corpus,
                      prelabels: dict[str, set[int]],
                      phase1_gold: GoldStandard,
                      annotators: list[Annotator],
                      per_topic_sentence_target: int,
                      phase: int = 2,
                      shared_per_topic: int = 1,
                      topics: list[int] | None = None,
                      seed: int = 0) -> PhasePlan:
    """Draw balanced per-annotator announcement pools from the pre-label index.

    For each topic the expected labeled-sentence yield per announcement comes
    from the phase-1 gold; the per-annotator announcement count is
    ceil(target / rate) so the sentence target is met in expectation. Shared
    announcements (one per topic by default) are identical for everyone; the
    unique pools are disjoint across annotators by drawing without replacement
    from a single global pool. `topics` restricts allocation (phase 3 passes
    the under-covered topics).
    """
    if not annotators:
        raise AllocationError("no annotators to allocate to")
    if per_topic_sentence_target <= 0:
        raise AllocationError("per-topic sentence target must be positive")
    rng = np.random.default_rng(seed)
    wanted_topics = sorted(topics) if topics is not None else list(range(NUM_TOPICS))
    rates = topic_rates(corpus, phase1_gold, wanted_topics)

    candidates: dict[int, list[str]] = {t: [] for t in wanted_topics}
    for ann in corpus.announcements:
        pre = prelabels.get(ann.id, set())
        for t in wanted_topics:
            if t in pre:
                candidates[t].append(ann.id)

    taken: set[str] = set()
    shared: list[str] = []
    for t in wanted_topics:
        pool = [a for a in candidates[t] if a not in taken]
        take = min(shared_per_topic, len(pool))
        if take < shared_per_topic:
            raise AllocationShortage({t: (shared_per_topic, len(pool))})
        picks = rng.choice(len(pool), size=take, replace=False)
        for i in sorted(int(p) for p in picks):
            shared.append(pool[i])
            taken.add(pool[i])

    per_topic_need = {
        t: math.ceil(per_topic_sentence_target / rates[t]) for t in wanted_topics
    }
    unique: dict[str, list[str]] = {a.id: [] for a in annotators}
    shortages: dict[int, tuple[int, int]] = {}
    for t in wanted_topics:
        pool = [a for a in candidates[t] if a not in taken]
        need = per_topic_need[t] * len(annotators)
        if len(pool) < need:
            shortages[t] = (need, len(pool))
            continue
        picks = rng.choice(len(pool), size=need, replace=False)
        chosen = [pool[int(i)] for i in picks]
        for j, annotator in enumerate(annotators):
            chunk = chosen[j * per_topic_need[t]:(j + 1) * per_topic_need[t]]
            unique[annotator.id].extend(chunk)
            taken.update(chunk)
    if shortages:
        raise AllocationShortage(shortages)

    return PhasePlan(
        phase=phase,
        shared_announcements=tuple(shared),
        unique_assignments={a: tuple(v) for a, v in unique.items()},
        per_topic_target=per_topic_sentence_target,
    )


class AnnotationStore:
    """Versioned per-(sentence, annotator) record storage.

    Concurrent writers never contend across keys; same-key writes are
    serialized by a lock. Overwrites keep the full history.
    """

    def __init__(self, corpus: Corpus, plan: PhasePlan | None = None,
                 annotators: list[Annotator] | None = None,
                 phase_open: bool = True):
        self._corpus = corpus
        self._sentences = corpus.sentence_index()
        self._ann_of_sentence = corpus.announcement_of()
        self._sentences_by_ann = {a.id: a.sentences for a in corpus.announcements}
        self._plan = plan
        self._annotators = {a.id: a for a in (annotators or [])}
        self._phase_open = phase_open
        self._history: dict[tuple[str, str], list[AnnotationRecord]] = {}
        self._lock = threading.Lock()

    @property
    def corpus(self) -> Corpus:
        return self._corpus

    @property
    def plan(self) -> PhasePlan | None:
        return self._plan

    def close_phase(self) -> None:
        self._phase_open = False

    def annotator(self, annotator_id: str) -> Annotator:
        if self._annotators and annotator_id not in self._annotators:
            raise NotFoundError(f"unknown annotator {annotator_id!r}")
        return self._annotators.get(annotator_id, Annotator(annotator_id))

    def _check_assignment(self, sentence_id: str, annotator_id: str) -> None:
        if sentence_id not in self._sentences:
            raise NotFoundError(f"unknown sentence {sentence_id!r}")
        self.annotator(annotator_id)
        if not self._phase_open:
            raise AnnotationValidationError("phase is closed for writing")
        if self._plan is not None:
            ann_id = self._ann_of_sentence[sentence_id]
            if ann_id not in self._plan.assigned_to(annotator_id):
                raise AnnotationValidationError(
                    f"announcement {ann_id!r} is not assigned to {annotator_id!r}"
                )

    def record_annotation(self, record: AnnotationRecord) -> AnnotationRecord:
        """Validate and persist one record; re-submission bumps the version."""
        self._check_assignment(record.sentence_id, record.annotator_id)
        key = (record.sentence_id, record.annotator_id)
        with self._lock:
            history = self._history.setdefault(key, [])
            stored = AnnotationRecord(
                sentence_id=record.sentence_id,
                annotator_id=record.annotator_id,
                labels=record.labels,
                irrelevant=record.irrelevant,
                comment=record.comment,
                recorded_at=record.recorded_at or time.time(),
                version=len(history) + 1,
            )
            history.append(stored)
        return stored

    def latest(self) -> dict[tuple[str, str], AnnotationRecord]:
        with self._lock:
            return {k: v[-1] for k, v in self._history.items()}

    def history(self, sentence_id: str, annotator_id: str) -> list[AnnotationRecord]:
        with self._lock:
            return list(self._history.get((sentence_id, annotator_id), []))

    def progress(self, annotator_id: str) -> dict[str, int]:
        self.annotator(annotator_id)
        assigned = ()
        if self._plan is not None:
            assigned = self._plan.assigned_to(annotator_id)
        assigned_sentences = {
            s.id
            for ann_id in assigned
            for s in self._sentences_of(ann_id)
        }
        with self._lock:
            labeled = {
                sid for (sid, aid) in self._history if aid == annotator_id
            }
        if assigned_sentences:
            labeled &= assigned_sentences
        return {
            "assigned": len(assigned_sentences),
            "labeled": len(labeled),
            "remaining": max(0, len(assigned_sentences) - len(labeled)),
        }

    def _sentences_of(self, ann_id: str):
        return self._sentences_by_ann.get(ann_id, ())

    def next_announcement(self, annotator_id: str) -> str | None:
        """First assigned announcement with at least one unlabeled sentence."""
        if self._plan is None:
            return None
        with self._lock:
            labeled = {
                sid for (sid, aid) in self._history if aid == annotator_id
            }
        for ann_id in self._plan.assigned_to(annotator_id):
            for s in self._sentences_of(ann_id):
                if s.id not in labeled:
                    return ann_id
        return None


def export_annotations(store_or_records, corpus: Corpus, level: str = "sentence",
                       allow_partial: bool = False) -> dict[str, dict[str, LabelSet]]:
    """Annotation matrix annotator -> item -> labels at the requested level.

    Document level unions each annotator's sentence labels per announcement.
    Requires a closed phase unless `allow_partial` is set.
    """
    if level not in ("sentence", "document"):
        raise ValueError(f"unknown level {level!r}")
    if isinstance(store_or_records, AnnotationStore):
        if store_or_records._phase_open and not allow_partial:
            raise AnnotationValidationError(
                "phase still open; pass allow_partial=True to export anyway"
            )
        latest = store_or_records.latest().values()
    else:
        latest = list(store_or_records)

    by_annotator: dict[str, dict[str, LabelSet]] = {}
    for rec in latest:
        by_annotator.setdefault(rec.annotator_id, {})[rec.sentence_id] = rec.labels
    if level == "sentence":
        return by_annotator

    ann_of = corpus.announcement_of()
    out: dict[str, dict[str, LabelSet]] = {}
    for annotator, items in by_annotator.items():
        per_doc: dict[str, list[LabelSet]] = {}
        for sid, ls in items.items():
            per_doc.setdefault(ann_of[sid], []).append(ls)
        out[annotator] = {
            doc: aggregate_to_document(parts) for doc, parts in per_doc.items()
        }
    return out


def matrix_to_csv(matrix: dict[str, dict[str, LabelSet]]) -> str:
    """Serialize an annotation matrix; empty matrices keep the header."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["item_id", "annotator_id", "labels"])
    for annotator in sorted(matrix):
        for item in sorted(matrix[annotator]):
            ids = "|".join(str(t) for t in matrix[annotator][item].ids())
            writer.writerow([item, annotator, ids])
    return buf.getvalue()


def matrix_from_csv(payload: str) -> dict[str, dict[str, LabelSet]]:
    reader = csv.reader(io.StringIO(payload))
    header = next(reader, None)
    if header != ["item_id", "annotator_id", "labels"]:
        raise ValueError(f"unexpected annotation matrix header: {header}")
    out: dict[str, dict[str, LabelSet]] = {}
    for row in reader:
        if not row:
            continue
        item, annotator, ids = row
        labels = LabelSet.from_ids(
            int(t) for t in ids.split("|") if ids and t != ""
        ) if ids else EMPTY_LABELS
        out.setdefault(annotator, {})[item] = labels
    return out


def gold_to_csv(gold: GoldStandard) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["item_id", "labels"])
    for item in sorted(gold.labels):
        ids = "|".join(str(t) for t in gold.labels[item].ids())
        writer.writerow([item, ids])
    return buf.getvalue()


def gold_from_csv(payload: str, provenance: tuple[str, ...] = ()) -> GoldStandard:
    reader = csv.reader(io.StringIO(payload))
    header = next(reader, None)
    if header != ["item_id", "labels"]:
        raise ValueError(f"unexpected gold header: {header}")
    labels: dict[str, LabelSet] = {}
    for row in reader:
        if not row:
            continue
        item, ids = row
        labels[item] = (
            LabelSet.from_ids(int(t) for t in ids.split("|")) if ids else EMPTY_LABELS
        )
    return GoldStandard(labels=labels, provenance=provenance)
