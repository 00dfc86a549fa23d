"""Announcement corpus: data model, ingestion, and descriptive statistics.

Announcements arrive as line-delimited JSON records, one per line, with fields
`{id, firm_id, date, source, text | sentences[]}`. Ingestion segments raw text
into sentences, removes duplicates with a deterministic preference for the
primary provider, and yields an immutable corpus that is safe for concurrent
readers.
"""

from __future__ import annotations

import hashlib
import io
import json
import re
from dataclasses import dataclass, field
from datetime import date, datetime
from itertools import combinations

from .descriptive import SummaryRow, summarize
from .labels import EMPTY_LABELS, LabelSet, Topic, validate_taxonomy

SOURCES = ("primary_provider", "register")

# Abbreviations that must not terminate a sentence. Extendable per corpus.
DEFAULT_ABBREVIATIONS = frozenset(
    {"Dr.", "Prof.", "Mr.", "Mrs.", "St.", "No.", "Nr.", "ca.", "approx.",
     "e.g.", "i.e.", "z.B.", "bzw.", "Co.", "Inc.", "Ltd.", "vs.", "etc."}
)

_BOUNDARY = re.compile(r"([.!?])(\s+)(?=[A-Z0-9ÄÖÜ])")


class IngestError(ValueError):
    """Fatal ingestion failure (for example an empty corpus)."""


@dataclass(frozen=True)
class RejectedRecord:
    line_number: int
    reason: str


@dataclass(frozen=True)
class Sentence:
    id: str
    announcement_id: str
    ordinal: int
    text: str

    def __post_init__(self) -> None:
        if not self.text:
            raise ValueError(f"sentence {self.id} has empty text")
        if self.ordinal < 0:
            raise ValueError(f"sentence {self.id} has negative ordinal")


@dataclass(frozen=True)
class Announcement:
    id: str
    firm_id: str
    published_at: date
    source: str
    sentences: tuple[Sentence, ...]

    def __post_init__(self) -> None:
        if self.source not in SOURCES:
            raise ValueError(f"unknown source {self.source!r}")
        if not self.sentences:
            raise ValueError(f"announcement {self.id} has no sentences")
        for i, s in enumerate(self.sentences):
            if s.ordinal != i:
                raise ValueError(
                    f"announcement {self.id}: ordinals must be consecutive from 0"
                )

    @property
    def text(self) -> str:
        return " ".join(s.text for s in self.sentences)


@dataclass(frozen=True)
class Corpus:
    announcements: tuple[Announcement, ...]
    rejected: tuple[RejectedRecord, ...] = ()

    def __len__(self) -> int:
        return len(self.announcements)

    def sentences(self):
        for ann in self.announcements:
            yield from ann.sentences

    def sentence_index(self) -> dict[str, Sentence]:
        return {s.id: s for s in self.sentences()}

    def announcement_of(self) -> dict[str, str]:
        """sentence id -> announcement id."""
        return {s.id: a.id for a in self.announcements for s in a.sentences}


def segment_sentences(text: str, abbreviations=DEFAULT_ABBREVIATIONS) -> list[str]:
    """Split on `.`, `!`, `?` followed by whitespace and an uppercase letter or digit.

    A candidate boundary is suppressed when the token ending at the punctuation
    mark is a known abbreviation.
    """
    text = text.strip()
    if not text:
        return []
    pieces: list[str] = []
    start = 0
    for m in _BOUNDARY.finditer(text):
        end = m.end(1)
        last_token = text[start:end].rsplit(None, 1)[-1]
        if last_token in abbreviations:
            continue
        pieces.append(text[start:end].strip())
        start = m.end(2)
    tail = text[start:].strip()
    if tail:
        pieces.append(tail)
    return pieces


def _sentence_tuple(ann_id: str, texts: list[str]) -> tuple[Sentence, ...]:
    return tuple(
        Sentence(id=f"{ann_id}:{i}", announcement_id=ann_id, ordinal=i, text=t)
        for i, t in enumerate(texts)
    )


def _parse_record(raw: str, abbreviations) -> Announcement:
    try:
        rec = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ValueError(f"invalid JSON: {exc}") from exc
    if not isinstance(rec, dict):
        raise ValueError("record is not an object")
    for key in ("id", "firm_id", "date", "source"):
        if key not in rec:
            raise ValueError(f"missing field {key!r}")
    try:
        published = datetime.strptime(str(rec["date"]), "%Y-%m-%d").date()
    except ValueError as exc:
        raise ValueError(f"invalid date {rec['date']!r}") from exc
    ann_id = str(rec["id"])
    if "sentences" in rec and rec["sentences"] is not None:
        texts = [str(t).strip() for t in rec["sentences"] if str(t).strip()]
    elif "text" in rec and rec["text"] is not None:
        texts = segment_sentences(str(rec["text"]), abbreviations)
    else:
        raise ValueError("record has neither 'text' nor 'sentences'")
    if not texts:
        raise ValueError("record has no sentence content")
    return Announcement(
        id=ann_id,
        firm_id=str(rec["firm_id"]),
        published_at=published,
        source=str(rec["source"]),
        sentences=_sentence_tuple(ann_id, texts),
    )


def _first_sentence_hash(ann: Announcement) -> str:
    return hashlib.sha256(ann.sentences[0].text.encode("utf-8")).hexdigest()


def ingest_corpus(records, taxonomy: list[Topic] | None = None,
                  abbreviations=DEFAULT_ABBREVIATIONS,
                  date_range: tuple[date, date] | None = None) -> Corpus:
    """Ingest line-delimited announcement records into a deduplicated corpus.

    `records` is an iterable of raw lines (or an open text stream). Malformed
    records are rejected individually with their line number; duplicates by
    record id, or by (firm, date, first-sentence hash) across sources, keep the
    primary-provider version. An entirely empty result is a fatal error. When a
    taxonomy is supplied it is validated up front so downstream labeling always
    sees the full 20-topic panel; when a (first, last) `date_range` is set,
    records published outside it are rejected like malformed ones.
    """
    if isinstance(records, (str, bytes)):
        raise TypeError("pass an iterable of lines, not a single string")
    if taxonomy is not None:
        validate_taxonomy(list(taxonomy))
    rejected: list[RejectedRecord] = []
    by_id: dict[str, Announcement] = {}
    order: list[str] = []
    for line_number, raw in enumerate(records, start=1):
        raw = raw.strip()
        if not raw:
            continue
        try:
            ann = _parse_record(raw, abbreviations)
        except ValueError as exc:
            rejected.append(RejectedRecord(line_number, str(exc)))
            continue
        if date_range is not None and not date_range[0] <= ann.published_at <= date_range[1]:
            rejected.append(RejectedRecord(
                line_number,
                f"published_at {ann.published_at.isoformat()} outside corpus "
                f"range {date_range[0].isoformat()}..{date_range[1].isoformat()}",
            ))
            continue
        prior = by_id.get(ann.id)
        if prior is None:
            by_id[ann.id] = ann
            order.append(ann.id)
        elif prior.source != "primary_provider" and ann.source == "primary_provider":
            by_id[ann.id] = ann

    # Cross-source duplicates: same firm, date, and first sentence but coming
    # from different sources. Same-source records with distinct ids stay.
    by_content: dict[tuple, int] = {}
    kept: list[Announcement] = []
    for ann_id in order:
        ann = by_id[ann_id]
        key = (ann.firm_id, ann.published_at.isoformat(), _first_sentence_hash(ann))
        prior_pos = by_content.get(key)
        if prior_pos is None or kept[prior_pos].source == ann.source:
            if prior_pos is None:
                by_content[key] = len(kept)
            kept.append(ann)
        elif kept[prior_pos].source != "primary_provider" and ann.source == "primary_provider":
            kept[prior_pos] = ann

    if not kept:
        raise IngestError(
            f"no valid announcements ingested ({len(rejected)} rejected)"
        )
    return Corpus(announcements=tuple(kept), rejected=tuple(rejected))


def read_corpus_file(path, abbreviations=DEFAULT_ABBREVIATIONS) -> Corpus:
    with open(path, "r", encoding="utf-8") as fh:
        return ingest_corpus(fh, abbreviations=abbreviations)


def serialize_corpus(corpus: Corpus) -> str:
    """Canonical line format: segmented, deduplicated, key-sorted JSON."""
    buf = io.StringIO()
    for ann in corpus.announcements:
        rec = {
            "id": ann.id,
            "firm_id": ann.firm_id,
            "date": ann.published_at.isoformat(),
            "source": ann.source,
            "sentences": [s.text for s in ann.sentences],
        }
        buf.write(json.dumps(rec, sort_keys=True, ensure_ascii=False))
        buf.write("\n")
    return buf.getvalue()


def aggregate_to_document(sentence_labels) -> LabelSet:
    """Union of per-sentence label sets; a document holds a topic as soon as
    one of its sentences does."""
    labels = list(sentence_labels)
    if not labels:
        raise ValueError("cannot aggregate an empty label list")
    out = EMPTY_LABELS
    for ls in labels:
        out = out | ls
    return out


def document_labels(corpus: Corpus, labels: dict[str, LabelSet]) -> dict[str, LabelSet]:
    """Per-announcement label sets from per-sentence labels (missing = empty)."""
    return {
        ann.id: aggregate_to_document(
            [labels.get(s.id, EMPTY_LABELS) for s in ann.sentences]
        )
        for ann in corpus.announcements
    }


@dataclass(frozen=True)
class CorpusStats:
    """Eight-number summaries at sentence and document level.

    Per level: texts per announcement (sentences, or the single aggregated
    document), labels per text, and labeled texts per topic.
    """

    sentence: dict[str, SummaryRow] = field(default_factory=dict)
    document: dict[str, SummaryRow] = field(default_factory=dict)

    def as_dict(self) -> dict:
        return {
            "sentence": {k: v.as_dict() for k, v in self.sentence.items()},
            "document": {k: v.as_dict() for k, v in self.document.items()},
        }


def corpus_stats(corpus: Corpus, labels: dict[str, LabelSet]) -> CorpusStats:
    """Descriptive statistics over the corpus and its labels.

    Every labeled sentence id must exist in the corpus. Percentiles are
    nearest-rank; std is the population standard deviation.
    """
    known = {s.id for s in corpus.sentences()}
    unknown = set(labels) - known
    if unknown:
        raise ValueError(f"labels reference unknown sentences: {sorted(unknown)[:5]}")

    sent_per_ann = [len(a.sentences) for a in corpus.announcements]
    labels_per_sentence = [
        len(labels.get(s.id, EMPTY_LABELS)) for s in corpus.sentences()
    ]
    sent_topic_counts = [0] * 20
    for s in corpus.sentences():
        for t in labels.get(s.id, EMPTY_LABELS):
            sent_topic_counts[t] += 1

    doc_labels = document_labels(corpus, labels)
    labels_per_document = [len(ls) for ls in doc_labels.values()]
    doc_topic_counts = [0] * 20
    for ls in doc_labels.values():
        for t in ls:
            doc_topic_counts[t] += 1

    return CorpusStats(
        sentence={
            "texts_per_announcement": summarize(sent_per_ann),
            "labels_per_text": summarize(labels_per_sentence),
            "labels_per_topic": summarize(sent_topic_counts),
        },
        document={
            "texts_per_announcement": summarize([1] * len(corpus.announcements)),
            "labels_per_text": summarize(labels_per_document),
            "labels_per_topic": summarize(doc_topic_counts),
        },
    )


def cooccurrence_counts(doc_labels) -> dict[tuple[int, int], int]:
    """Unordered topic-pair counts over documents; a document with k topics
    contributes C(k, 2) pairs."""
    counts: dict[tuple[int, int], int] = {}
    for ls in doc_labels:
        for a, b in combinations(sorted(ls.ids()), 2):
            counts[(a, b)] = counts.get((a, b), 0) + 1
    return counts


def stats_report_csv(stats: CorpusStats) -> str:
    cols = ["count", "mean", "std", "min", "p25", "p50", "p75", "max"]
    lines = ["level,metric," + ",".join(cols)]
    for level in ("sentence", "document"):
        rows = getattr(stats, level)
        for metric, row in rows.items():
            d = row.as_dict()
            lines.append(
                f"{level},{metric}," + ",".join(_fmt(d[c]) for c in cols)
            )
    return "\n".join(lines) + "\n"


def _fmt(x) -> str:
    if isinstance(x, int):
        return str(x)
    return repr(float(x))
