import json
import math

import pytest

from adhoc_topics.annotation import (
    AllocationError,
    AllocationShortage,
    AnnotationRecord,
    AnnotationStore,
    AnnotationValidationError,
    Annotator,
    GoldStandard,
    NotFoundError,
    allocate_balanced,
    export_annotations,
    gold_from_csv,
    gold_to_csv,
    matrix_from_csv,
    matrix_to_csv,
    topic_rates,
)
from adhoc_topics.corpus import ingest_corpus
from adhoc_topics.labels import EMPTY_LABELS, LabelSet


def build_corpus(n_announcements=40, sentences_each=4):
    lines = []
    for i in range(n_announcements):
        lines.append(json.dumps({
            "id": f"a{i:03d}", "firm_id": f"F{i % 5}", "date": "2020-01-02",
            "source": "primary_provider",
            "sentences": [f"Satz {i} {j}." for j in range(sentences_each)],
        }))
    return ingest_corpus(lines)


def gold_with_rates(corpus, rates):
    """Phase-1 gold where topic t appears `rates[t]` times in one announcement."""
    labels = {}
    for t, rate in rates.items():
        ann = corpus.announcements[t]
        for j in range(rate):
            labels[ann.sentences[j].id] = LabelSet.from_ids([t])
    # every other topic gets a single labeled sentence somewhere
    for t in range(20):
        if t not in rates:
            ann = corpus.announcements[20 + t % 10]
            sid = ann.sentences[t % 4].id
            labels[sid] = labels.get(sid, EMPTY_LABELS) | LabelSet.from_ids([t])
    return GoldStandard(labels=labels, provenance=("A1", "A7"))


class TestTopicRates:
    def test_rates_from_counts(self):
        corpus = build_corpus()
        gold = gold_with_rates(corpus, {0: 4, 1: 1})
        rates = topic_rates(corpus, gold)
        assert rates[0] == 4.0
        assert rates[1] == 1.0

    def test_missing_topic_is_error(self):
        corpus = build_corpus()
        gold = GoldStandard(labels={corpus.announcements[0].sentences[0].id:
                                    LabelSet.from_ids([0])})
        with pytest.raises(AllocationError, match="topic 1"):
            topic_rates(corpus, gold)


class TestAllocate:
    def make_inputs(self, rates):
        corpus = build_corpus(n_announcements=240)
        gold = gold_with_rates(corpus, rates)
        # every announcement is a candidate for its (id mod 20) topic
        prelabels = {
            ann.id: {i % 20}
            for i, ann in enumerate(corpus.announcements)
        }
        return corpus, gold, prelabels

    def test_ceil_rule_on_two_topics(self):
        corpus, gold, prelabels = self.make_inputs({0: 4, 1: 1})
        plan = allocate_balanced(
            corpus, prelabels, gold, [Annotator("A1")],
            per_topic_sentence_target=8, topics=[0, 1], seed=1,
        )
        ids = plan.unique_assignments["A1"]
        by_topic = {0: 0, 1: 0}
        for ann_id in ids:
            by_topic[next(iter(prelabels[ann_id]))] += 1
        assert by_topic[0] == 2     # ceil(8 / 4)
        assert by_topic[1] == 8     # ceil(8 / 1)

    def test_equal_rates_get_equal_counts(self):
        corpus, gold, prelabels = self.make_inputs({t: 2 for t in range(20)})
        plan = allocate_balanced(
            corpus, prelabels, gold, [Annotator("A1"), Annotator("A2")],
            per_topic_sentence_target=4, seed=0,
        )
        for annotator in ("A1", "A2"):
            by_topic = {}
            for ann_id in plan.unique_assignments[annotator]:
                t = next(iter(prelabels[ann_id]))
                by_topic[t] = by_topic.get(t, 0) + 1
            assert set(by_topic.values()) == {math.ceil(4 / 2)}

    def test_disjoint_across_annotators_and_shared_identical(self):
        corpus, gold, prelabels = self.make_inputs({t: 2 for t in range(20)})
        annotators = [Annotator(f"A{i}") for i in range(1, 6)]
        plan = allocate_balanced(corpus, prelabels, gold, annotators,
                                 per_topic_sentence_target=4, seed=3)
        seen = set(plan.shared_announcements)
        assert len(plan.shared_announcements) == 20
        for ids in plan.unique_assignments.values():
            for ann_id in ids:
                assert ann_id not in seen
                seen.add(ann_id)

    def test_seed_determinism(self):
        corpus, gold, prelabels = self.make_inputs({t: 2 for t in range(20)})
        args = (corpus, prelabels, gold, [Annotator("A1"), Annotator("A2")])
        p1 = allocate_balanced(*args, per_topic_sentence_target=4, seed=11)
        p2 = allocate_balanced(*args, per_topic_sentence_target=4, seed=11)
        p3 = allocate_balanced(*args, per_topic_sentence_target=4, seed=12)
        assert p1 == p2
        assert p1 != p3

    def test_shortage_names_topic(self):
        corpus, gold, prelabels = self.make_inputs({t: 1 for t in range(20)})
        annotators = [Annotator(f"A{i}") for i in range(1, 10)]
        with pytest.raises(AllocationShortage) as err:
            allocate_balanced(corpus, prelabels, gold, annotators,
                              per_topic_sentence_target=50, seed=0)
        assert err.value.shortages
        assert "topic" in str(err.value)

    def test_phase3_restriction(self):
        corpus, gold, prelabels = self.make_inputs({t: 2 for t in range(20)})
        plan = allocate_balanced(corpus, prelabels, gold, [Annotator("A1")],
                                 per_topic_sentence_target=2, phase=3,
                                 topics=[4, 5], seed=0)
        assert plan.phase == 3
        for ann_id in plan.unique_assignments["A1"]:
            assert prelabels[ann_id] & {4, 5}
        assert len(plan.shared_announcements) == 2


class TestRecordValidation:
    def make_store(self):
        corpus = build_corpus(n_announcements=4)
        plan_ids = tuple(a.id for a in corpus.announcements)
        from adhoc_topics.annotation import PhasePlan

        plan = PhasePlan(phase=1, shared_announcements=plan_ids,
                         unique_assignments={}, per_topic_target=0)
        return AnnotationStore(corpus, plan=plan,
                               annotators=[Annotator("A1"), Annotator("A2")])

    def test_plain_record_accepted(self):
        store = self.make_store()
        rec = store.record_annotation(AnnotationRecord(
            sentence_id="a000:0", annotator_id="A1",
            labels=LabelSet.from_ids([0]),
        ))
        assert rec.version == 1 and rec.recorded_at > 0

    def test_irrelevant_with_labels_rejected(self):
        with pytest.raises(AnnotationValidationError, match="Irrelevant"):
            AnnotationRecord(sentence_id="a000:0", annotator_id="A1",
                             labels=LabelSet.from_ids([0]), irrelevant=True)

    def test_empty_labels_with_comment_accepted(self):
        store = self.make_store()
        rec = store.record_annotation(AnnotationRecord(
            sentence_id="a000:1", annotator_id="A1", labels=EMPTY_LABELS,
            comment="unsure",
        ))
        assert rec.comment == "unsure"

    def test_unknown_sentence_and_annotator(self):
        store = self.make_store()
        with pytest.raises(NotFoundError):
            store.record_annotation(AnnotationRecord(
                sentence_id="ghost:0", annotator_id="A1", labels=EMPTY_LABELS))
        with pytest.raises(NotFoundError):
            store.record_annotation(AnnotationRecord(
                sentence_id="a000:0", annotator_id="A9", labels=EMPTY_LABELS))

    def test_overwrite_is_versioned(self):
        store = self.make_store()
        first = store.record_annotation(AnnotationRecord(
            sentence_id="a000:0", annotator_id="A1",
            labels=LabelSet.from_ids([0])))
        second = store.record_annotation(AnnotationRecord(
            sentence_id="a000:0", annotator_id="A1",
            labels=LabelSet.from_ids([1])))
        assert (first.version, second.version) == (1, 2)
        assert len(store.history("a000:0", "A1")) == 2
        assert store.latest()[("a000:0", "A1")].labels.ids() == (1,)

    def test_unassigned_announcement_rejected(self):
        corpus = build_corpus(n_announcements=4)
        from adhoc_topics.annotation import PhasePlan

        plan = PhasePlan(phase=2, shared_announcements=("a000",),
                         unique_assignments={"A1": ("a001",)},
                         per_topic_target=0)
        store = AnnotationStore(corpus, plan=plan, annotators=[Annotator("A1")])
        with pytest.raises(AnnotationValidationError, match="not assigned"):
            store.record_annotation(AnnotationRecord(
                sentence_id="a003:0", annotator_id="A1", labels=EMPTY_LABELS))

    def test_closed_phase_rejects_writes(self):
        store = self.make_store()
        store.close_phase()
        with pytest.raises(AnnotationValidationError, match="closed"):
            store.record_annotation(AnnotationRecord(
                sentence_id="a000:0", annotator_id="A1", labels=EMPTY_LABELS))

    def test_concurrent_same_key_writes_are_serialized(self):
        import threading

        store = self.make_store()

        def write(worker):
            for _ in range(25):
                store.record_annotation(AnnotationRecord(
                    sentence_id="a000:0", annotator_id="A1",
                    labels=LabelSet.from_ids([worker])))

        threads = [threading.Thread(target=write, args=(w,)) for w in range(4)]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        history = store.history("a000:0", "A1")
        assert len(history) == 100
        assert [rec.version for rec in history] == list(range(1, 101))

    def test_every_stored_record_satisfies_exclusivity(self):
        store = self.make_store()
        for j in range(4):
            store.record_annotation(AnnotationRecord(
                sentence_id=f"a000:{j}", annotator_id="A1",
                labels=LabelSet.from_ids([j]) if j % 2 else EMPTY_LABELS,
                irrelevant=(j == 0)))
        for rec in store.latest().values():
            assert not (rec.irrelevant and rec.labels)


class TestExport:
    def test_document_level_unions_sentences(self):
        corpus = build_corpus(n_announcements=2)
        store = AnnotationStore(corpus, phase_open=True)
        store.record_annotation(AnnotationRecord(
            sentence_id="a000:0", annotator_id="A1",
            labels=LabelSet.from_ids([0])))
        store.record_annotation(AnnotationRecord(
            sentence_id="a000:1", annotator_id="A1",
            labels=LabelSet.from_ids([1])))
        store.close_phase()
        matrix = export_annotations(store, corpus, level="document")
        assert matrix["A1"]["a000"].ids() == (0, 1)

    def test_open_phase_requires_partial_flag(self):
        corpus = build_corpus(n_announcements=1)
        store = AnnotationStore(corpus, phase_open=True)
        with pytest.raises(AnnotationValidationError, match="open"):
            export_annotations(store, corpus)
        assert export_annotations(store, corpus, allow_partial=True) == {}

    def test_empty_matrix_keeps_header(self):
        assert matrix_to_csv({}) == "item_id,annotator_id,labels\n"

    def test_matrix_roundtrip_bit_identical(self):
        corpus = build_corpus(n_announcements=3)
        store = AnnotationStore(corpus, phase_open=True)
        labels = [LabelSet.from_ids([0, 3]), EMPTY_LABELS, LabelSet.from_ids([19])]
        for a in ("A1", "A2", "A3"):
            for j in range(3):
                store.record_annotation(AnnotationRecord(
                    sentence_id=f"a000:{j}", annotator_id=a, labels=labels[j]))
        store.close_phase()
        matrix = export_annotations(store, corpus, level="sentence")
        payload = matrix_to_csv(matrix)
        assert matrix_from_csv(payload) == matrix
        assert matrix_to_csv(matrix_from_csv(payload)) == payload


def test_gold_csv_roundtrip():
    gold = GoldStandard(labels={
        "a:0": LabelSet.from_ids([1, 2]),
        "a:1": EMPTY_LABELS,
    })
    payload = gold_to_csv(gold)
    back = gold_from_csv(payload)
    assert back.labels == gold.labels
