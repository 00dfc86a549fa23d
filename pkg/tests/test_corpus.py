import json
import math
import random

import numpy as np
import pytest
from hypothesis import given, strategies as st

from adhoc_topics.corpus import (
    IngestError,
    aggregate_to_document,
    cooccurrence_counts,
    corpus_stats,
    document_labels,
    ingest_corpus,
    segment_sentences,
    serialize_corpus,
)
from adhoc_topics.descriptive import nearest_rank, summarize
from adhoc_topics.labels import EMPTY_LABELS, LabelSet, default_taxonomy


def record(id, text=None, sentences=None, firm="F1", date="2020-01-02",
           source="primary_provider"):
    rec = {"id": id, "firm_id": firm, "date": date, "source": source}
    if sentences is not None:
        rec["sentences"] = sentences
    if text is not None:
        rec["text"] = text
    return json.dumps(rec)


class TestSegmentation:
    def test_three_simple_sentences(self):
        # Segmentation rule applied by hand: split after ., ?, ! before an
        # uppercase letter or digit.
        assert segment_sentences("A. B? C!") == ["A.", "B?", "C!"]

    def test_abbreviation_protected(self):
        text = "Die Zahlen stiegen um ca. 5 Prozent. Der Vorstand freut sich."
        assert segment_sentences(text) == [
            "Die Zahlen stiegen um ca. 5 Prozent.",
            "Der Vorstand freut sich.",
        ]

    def test_no_split_before_lowercase(self):
        assert segment_sentences("Inc. went up. then down") == [
            "Inc. went up. then down"
        ]

    def test_digit_starts_sentence(self):
        assert segment_sentences("Gewinn steigt. 2020 war gut.") == [
            "Gewinn steigt.",
            "2020 war gut.",
        ]


class TestIngest:
    def test_presegmented_identity(self):
        corpus = ingest_corpus([record("a1", sentences=["S one.", "S two.", "S three."])])
        ann = corpus.announcements[0]
        assert [s.ordinal for s in ann.sentences] == [0, 1, 2]
        assert [s.id for s in ann.sentences] == ["a1:0", "a1:1", "a1:2"]

    def test_raw_text_segmented(self):
        corpus = ingest_corpus([record("a1", text="A. B? C!")])
        assert len(corpus.announcements[0].sentences) == 3

    def test_duplicate_id_prefers_primary_provider(self):
        lines = [
            record("a1", sentences=["X."], source="register"),
            record("a1", sentences=["X."], source="primary_provider"),
        ]
        corpus = ingest_corpus(lines)
        assert len(corpus) == 1
        assert corpus.announcements[0].source == "primary_provider"
        # order does not change the winner
        corpus = ingest_corpus(list(reversed(lines)))
        assert corpus.announcements[0].source == "primary_provider"

    def test_cross_source_duplicate_matched_by_content(self):
        lines = [
            record("reg-9", sentences=["Same first sentence.", "tail"],
                   source="register"),
            record("eqs-1", sentences=["Same first sentence.", "other tail"],
                   source="primary_provider"),
        ]
        corpus = ingest_corpus(lines)
        assert len(corpus) == 1
        assert corpus.announcements[0].source == "primary_provider"

    def test_malformed_records_rejected_with_line_numbers(self):
        lines = [
            "not json",
            record("ok1", sentences=["Fine."]),
            json.dumps({"id": "x", "firm_id": "F", "date": "bad", "source": "register"}),
        ]
        corpus = ingest_corpus(lines)
        assert len(corpus) == 1
        assert [r.line_number for r in corpus.rejected] == [1, 3]

    def test_empty_corpus_is_fatal(self):
        with pytest.raises(IngestError):
            ingest_corpus(["nonsense"])

    def test_ingest_deterministic_serialization(self):
        lines = [record(f"a{i}", text="Erste Zeile. Zweite Zeile.") for i in range(5)]
        c1 = serialize_corpus(ingest_corpus(lines))
        c2 = serialize_corpus(ingest_corpus(lines))
        assert c1 == c2

    def test_date_range_rejects_out_of_range_records(self):
        from datetime import date

        lines = [
            record("in1", sentences=["Drin."], date="2015-06-01"),
            record("out1", sentences=["Zu alt."], date="1995-01-01"),
            record("out2", sentences=["Zu neu."], date="2030-01-01"),
        ]
        corpus = ingest_corpus(lines,
                               date_range=(date(2000, 1, 1), date(2025, 12, 31)))
        assert [a.id for a in corpus.announcements] == ["in1"]
        assert len(corpus.rejected) == 2
        assert all("outside corpus range" in r.reason for r in corpus.rejected)


class TestAggregate:
    def test_union(self):
        out = aggregate_to_document(
            [LabelSet.from_ids([0]), LabelSet.from_ids([3]), EMPTY_LABELS]
        )
        assert out.ids() == (0, 3)

    def test_empty_sets(self):
        assert aggregate_to_document([EMPTY_LABELS, EMPTY_LABELS]) == EMPTY_LABELS

    def test_idempotent_union(self):
        out = aggregate_to_document(
            [LabelSet.from_ids([0]), LabelSet.from_ids([0, 3])]
        )
        assert out.ids() == (0, 3)

    def test_empty_list_rejected(self):
        with pytest.raises(ValueError):
            aggregate_to_document([])

    @given(st.lists(st.sets(st.integers(0, 19)), min_size=1, max_size=8),
           st.randoms())
    def test_union_laws(self, sets, rnd):
        labels = [LabelSet.from_ids(s) for s in sets]
        base = aggregate_to_document(labels)
        shuffled = list(labels)
        rnd.shuffle(shuffled)
        assert aggregate_to_document(shuffled) == base          # commutative
        assert aggregate_to_document(labels + labels) == base   # idempotent
        expected = frozenset().union(*sets)
        assert frozenset(base.ids()) == expected


class TestNearestRank:
    def test_median_of_three(self):
        assert nearest_rank([1, 2, 3], 50) == 2

    def test_ordering_invariant(self):
        rng = np.random.default_rng(0)
        for _ in range(50):
            data = rng.normal(size=rng.integers(1, 30))
            assert nearest_rank(data, 25) <= nearest_rank(data, 75)

    def test_even_length_takes_lower_central_rank(self):
        assert nearest_rank([-1.0, 1.0], 50) == -1.0


def spreadsheet_summary(values):
    """Independent oracle: sort-based nearest-rank and direct moment sums."""
    values = sorted(float(v) for v in values)
    n = len(values)
    mean = sum(values) / n
    std = math.sqrt(sum((v - mean) ** 2 for v in values) / n)

    def pick(p):
        return values[max(1, math.ceil(p / 100 * n)) - 1]

    return {
        "count": n, "mean": mean, "std": std, "min": values[0],
        "p25": pick(25), "p50": pick(50), "p75": pick(75), "max": values[-1],
    }


class TestCorpusStats:
    def build(self):
        lines = []
        sizes = [4, 2, 5, 1, 3]
        for i, size in enumerate(sizes):
            lines.append(record(f"a{i}", sentences=[f"Satz {j}." for j in range(size)]))
        corpus = ingest_corpus(lines)
        rng = random.Random(42)
        labels = {}
        for s in corpus.sentences():
            k = rng.choice([0, 0, 1, 1, 2])
            labels[s.id] = LabelSet.from_ids(rng.sample(range(20), k))
        return corpus, labels

    def test_single_announcement(self):
        corpus = ingest_corpus([record("a0", sentences=["A.", "B.", "C.", "D."])])
        stats = corpus_stats(corpus, {})
        row = stats.sentence["texts_per_announcement"]
        assert row.mean == 4 and row.std == 0 and row.count == 1

    def test_matches_spreadsheet_oracle(self):
        corpus, labels = self.build()
        stats = corpus_stats(corpus, labels)

        oracle = spreadsheet_summary([4, 2, 5, 1, 3])
        got = stats.sentence["texts_per_announcement"].as_dict()
        for key, val in oracle.items():
            assert got[key] == pytest.approx(val, abs=1e-12)

        per_sentence = [len(labels[s.id]) for s in corpus.sentences()]
        oracle = spreadsheet_summary(per_sentence)
        got = stats.sentence["labels_per_text"].as_dict()
        for key, val in oracle.items():
            assert got[key] == pytest.approx(val, abs=1e-12)

        doc = document_labels(corpus, labels)
        oracle = spreadsheet_summary([len(ls) for ls in doc.values()])
        got = stats.document["labels_per_text"].as_dict()
        for key, val in oracle.items():
            assert got[key] == pytest.approx(val, abs=1e-12)

        topic_counts = [0] * 20
        for ls in labels.values():
            for t in ls:
                topic_counts[t] += 1
        oracle = spreadsheet_summary(topic_counts)
        got = stats.sentence["labels_per_topic"].as_dict()
        for key, val in oracle.items():
            assert got[key] == pytest.approx(val, abs=1e-12)

    def test_percentile_monotonicity(self):
        corpus, labels = self.build()
        stats = corpus_stats(corpus, labels)
        for level in (stats.sentence, stats.document):
            for row in level.values():
                assert row.min <= row.p25 <= row.p50 <= row.p75 <= row.max

    def test_unknown_sentence_rejected(self):
        corpus, _ = self.build()
        with pytest.raises(ValueError, match="unknown sentences"):
            corpus_stats(corpus, {"ghost:0": EMPTY_LABELS})

    def test_multilabel_documents_at_least_multilabel_sentences(self):
        corpus, labels = self.build()
        doc = document_labels(corpus, labels)
        multi_docs = sum(1 for ls in doc.values() if len(ls) > 1)
        anns_with_multi_sentence = 0
        for ann in corpus.announcements:
            if any(len(labels[s.id]) > 1 for s in ann.sentences):
                anns_with_multi_sentence += 1
        assert multi_docs >= anns_with_multi_sentence


class TestCooccurrence:
    def test_triple_gives_three_pairs(self):
        counts = cooccurrence_counts([LabelSet.from_ids([1, 2, 3])])
        assert counts == {(1, 2): 1, (1, 3): 1, (2, 3): 1}

    def test_singletons_give_nothing(self):
        counts = cooccurrence_counts([LabelSet.from_ids([1]), LabelSet.from_ids([2])])
        assert counts == {}

    def test_matches_double_loop_oracle(self):
        rng = random.Random(7)
        docs = [
            LabelSet.from_ids(rng.sample(range(20), rng.randint(0, 5)))
            for _ in range(20)
        ]
        counts = cooccurrence_counts(docs)
        oracle = {}
        for ls in docs:
            ids = ls.ids()
            for i in range(len(ids)):
                for j in range(i + 1, len(ids)):
                    key = (ids[i], ids[j])
                    oracle[key] = oracle.get(key, 0) + 1
        assert counts == oracle
