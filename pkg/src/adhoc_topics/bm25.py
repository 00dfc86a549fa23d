"""Okapi BM25 retrieval over corpus sentences, used for preliminary topic labels.

Each topic carries a keyword query; every sentence is pre-labeled with the
highest-scoring topic when that score clears a threshold. Pre-labels steer
annotation allocation, so scoring is per sentence. Defaults k1=1.2, b=0.75,
threshold=0 are the canonical Okapi parameterization.
"""

from __future__ import annotations

from collections import Counter
from dataclasses import dataclass, field
from math import log

from .corpus import Corpus
from .labels import Topic, validate_taxonomy
from .text import tokenize


class PrelabelConfigError(ValueError):
    """Raised when a topic has no usable keyword query."""


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.2
    b: float = 0.75
    score_threshold: float = 0.0

    def __post_init__(self) -> None:
        if self.k1 <= 0:
            raise ValueError(f"k1 must be > 0, got {self.k1}")
        if not 0 <= self.b <= 1:
            raise ValueError(f"b must be in [0, 1], got {self.b}")
        if self.score_threshold < 0:
            raise ValueError(f"score_threshold must be >= 0, got {self.score_threshold}")


@dataclass
class Bm25Index:
    sentence_ids: list[str]
    term_counts: dict[str, Counter]          # sentence id -> term -> tf
    lengths: dict[str, int]                  # sentence id -> token count
    doc_freq: Counter = field(default_factory=Counter)
    avg_length: float = 0.0

    @property
    def n_sentences(self) -> int:
        return len(self.sentence_ids)

    def idf(self, term: str) -> float:
        # +1 inside the log keeps idf non-negative for high-df terms, so the
        # argmax over topics is never flipped by a sign change.
        df = self.doc_freq.get(term, 0)
        n = self.n_sentences
        return log((n - df + 0.5) / (df + 0.5) + 1.0)


def build_index(corpus: Corpus) -> Bm25Index:
    """Index every sentence; tokenization matches the classifier's (no cap)."""
    if len(corpus) == 0:
        raise ValueError("cannot index an empty corpus")
    sentence_ids: list[str] = []
    term_counts: dict[str, Counter] = {}
    lengths: dict[str, int] = {}
    doc_freq: Counter = Counter()
    total = 0
    for sent in corpus.sentences():
        tokens = tokenize(sent.text)
        sentence_ids.append(sent.id)
        tf = Counter(tokens)
        term_counts[sent.id] = tf
        lengths[sent.id] = len(tokens)
        total += len(tokens)
        doc_freq.update(tf.keys())
    return Bm25Index(
        sentence_ids=sentence_ids,
        term_counts=term_counts,
        lengths=lengths,
        doc_freq=doc_freq,
        avg_length=total / len(sentence_ids),
    )


def bm25_score(index: Bm25Index, query: list[str], sentence_id: str,
               params: Bm25Params = Bm25Params()) -> float:
    """Sum over query terms of idf(t) * tf*(k1+1) / (tf + k1*(1-b+b*len/avglen)).

    Terms absent from the sentence contribute zero; an empty query scores zero.
    """
    if sentence_id not in index.term_counts:
        raise KeyError(f"unknown sentence {sentence_id!r}")
    tf_map = index.term_counts[sentence_id]
    length = index.lengths[sentence_id]
    norm = params.k1 * (1.0 - params.b + params.b * length / index.avg_length)
    score = 0.0
    for term in query:
        tf = tf_map.get(term, 0)
        if tf == 0:
            continue
        score += index.idf(term) * tf * (params.k1 + 1.0) / (tf + norm)
    return score


def topic_queries(taxonomy: list[Topic]) -> dict[int, list[str]]:
    """Tokenized keyword query per topic; empty queries are a configuration error."""
    queries: dict[int, list[str]] = {}
    for topic in validate_taxonomy(list(taxonomy)):
        terms: list[str] = []
        for phrase in topic.keywords:
            terms.extend(tokenize(phrase))
        if not terms:
            raise PrelabelConfigError(f"topic {topic.name!r} has an empty keyword query")
        queries[topic.id] = terms
    return queries


@dataclass(frozen=True)
class Prelabel:
    sentence_id: str
    topic_id: int | None
    score: float


def prelabel_corpus(corpus: Corpus, taxonomy: list[Topic],
                    params: Bm25Params = Bm25Params()) -> dict[str, Prelabel]:
    """Assign each sentence the argmax-scoring topic when score > threshold.

    Ties break toward the lowest topic id. Returns one entry per sentence;
    `topic_id` is None when no topic clears the threshold.
    """
    index = build_index(corpus)
    queries = topic_queries(taxonomy)
    out: dict[str, Prelabel] = {}
    for sid in index.sentence_ids:
        best_topic: int | None = None
        best_score = 0.0
        for topic_id in sorted(queries):
            s = bm25_score(index, queries[topic_id], sid, params)
            if s > best_score:
                best_topic, best_score = topic_id, s
        if best_topic is None or best_score <= params.score_threshold:
            out[sid] = Prelabel(sid, None, best_score)
        else:
            out[sid] = Prelabel(sid, best_topic, best_score)
    return out


def announcement_prelabels(corpus: Corpus, prelabels: dict[str, Prelabel]) -> dict[str, set[int]]:
    """An announcement carries a preliminary topic when at least one of its
    sentences does."""
    out: dict[str, set[int]] = {}
    for ann in corpus.announcements:
        topics = {
            prelabels[s.id].topic_id
            for s in ann.sentences
            if s.id in prelabels and prelabels[s.id].topic_id is not None
        }
        out[ann.id] = topics
    return out


def prelabel_dump_csv(prelabels: dict[str, Prelabel]) -> str:
    lines = ["sentence_id,topic_id,score"]
    for sid in sorted(prelabels):
        p = prelabels[sid]
        topic = "none" if p.topic_id is None else str(p.topic_id)
        lines.append(f"{sid},{topic},{p.score!r}")
    return "\n".join(lines) + "\n"
