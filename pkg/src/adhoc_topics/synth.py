"""Deterministic synthetic fixtures at desk scale.

Real announcement corpora and market data are proprietary, so every pipeline
stage can run against generated stand-ins: a keyword-planted separable corpus,
simulated annotators around a gold standard, daily return panels with planted
event effects, and panel designs with known coefficients.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import date, timedelta

import numpy as np

from .corpus import Corpus, ingest_corpus
from .labels import EMPTY_LABELS, NUM_TOPICS, LabelSet, Topic, default_taxonomy
from .panel import PanelEvent
from .text import tokenize

NOISE_WORDS = (
    "der die das und heute hat wird für einen durch nach sich auch unter über "
    "bereits sowie weiter neuen am im zum mit bei einer alle dem des"
).split()


def unique_topic_tokens(taxonomy: list[Topic]) -> dict[int, list[str]]:
    """Keyword tokens that identify exactly one topic; planting only these
    keeps the synthetic corpus separable."""
    token_owner: dict[str, set[int]] = {}
    for topic in taxonomy:
        for phrase in topic.keywords:
            for tok in tokenize(phrase):
                token_owner.setdefault(tok, set()).add(topic.id)
    out: dict[int, list[str]] = {t.id: [] for t in taxonomy}
    for tok, owners in sorted(token_owner.items()):
        if len(owners) == 1:
            out[next(iter(owners))].append(tok)
    for t, toks in out.items():
        if len(toks) < 2:
            raise ValueError(f"topic {t} has fewer than 2 distinctive tokens")
    return out


@dataclass
class SyntheticCorpus:
    corpus: Corpus
    gold: dict[str, LabelSet]            # sentence id -> planted labels
    records: list[str]                   # raw ingest lines


def synthetic_corpus(n_sentences: int = 2000, seed: int = 0,
                     taxonomy: list[Topic] | None = None,
                     empty_rate: float = 0.2,
                     second_topic_rate: float = 0.25) -> SyntheticCorpus:
    """Keyword-planted corpus with sentence-level gold labels.

    Sentences carry zero, one, or two topics; labeled sentences embed two or
    three distinctive keywords per topic among noise words. Announcements
    bundle 3-7 sentences under round-robin firms and weekly dates.
    """
    taxonomy = taxonomy or default_taxonomy()
    planted = unique_topic_tokens(taxonomy)
    rng = np.random.default_rng(seed)

    sentences: list[tuple[str, LabelSet]] = []
    for i in range(n_sentences):
        roll = rng.random()
        if roll < empty_rate:
            labels = EMPTY_LABELS
        else:
            first = i % NUM_TOPICS   # round robin keeps every topic covered
            ids = [first]
            if rng.random() < second_topic_rate:
                other = int(rng.integers(NUM_TOPICS))
                if other != first:
                    ids.append(other)
            labels = LabelSet.from_ids(ids)
        words: list[str] = []
        for t in labels:
            k = 2 + int(rng.integers(2))
            picks = rng.choice(len(planted[t]), size=min(k, len(planted[t])),
                               replace=False)
            words.extend(planted[t][int(p)] for p in picks)
        n_noise = 2 + int(rng.integers(3))
        noise = rng.choice(len(NOISE_WORDS), size=n_noise, replace=True)
        words.extend(NOISE_WORDS[int(p)] for p in noise)
        order = rng.permutation(len(words))
        text = " ".join(words[int(j)] for j in order) + "."
        sentences.append((text, labels))

    records: list[str] = []
    gold: dict[str, LabelSet] = {}
    start = date(2015, 1, 5)
    cursor = 0
    ann_index = 0
    while cursor < len(sentences):
        size = 3 + int(rng.integers(5))
        chunk = sentences[cursor:cursor + size]
        cursor += size
        ann_id = f"ann{ann_index:05d}"
        rec = {
            "id": ann_id,
            "firm_id": f"F{ann_index % 40:03d}",
            "date": (start + timedelta(days=7 * (ann_index % 300))).isoformat(),
            "source": "primary_provider",
            "sentences": [text for text, _ in chunk],
        }
        records.append(json.dumps(rec, sort_keys=True, ensure_ascii=False))
        for j, (_, labels) in enumerate(chunk):
            gold[f"{ann_id}:{j}"] = labels
        ann_index += 1

    corpus = ingest_corpus(records)
    return SyntheticCorpus(corpus=corpus, gold=gold, records=records)


def simulate_annotators(gold: dict[str, LabelSet], annotator_ids: list[str],
                        miss_rate: float = 0.15, add_rate: float = 0.02,
                        seed: int = 0) -> dict[str, dict[str, LabelSet]]:
    """Noisy copies of the gold standard: each annotator drops a gold label
    with `miss_rate` and sprinkles in a wrong one with `add_rate` per topic."""
    rng = np.random.default_rng(seed)
    out: dict[str, dict[str, LabelSet]] = {}
    for annotator in annotator_ids:
        items: dict[str, LabelSet] = {}
        for sid in sorted(gold):
            ids = []
            for t in range(NUM_TOPICS):
                if t in gold[sid]:
                    if rng.random() >= miss_rate:
                        ids.append(t)
                elif rng.random() < add_rate:
                    ids.append(t)
            items[sid] = LabelSet.from_ids(ids)
        out[annotator] = items
    return out


@dataclass
class SyntheticMarket:
    firm_returns: dict[str, dict[date, float]]
    market: dict[date, float]
    risk_free: dict[date, float]
    events: list[tuple[str, date, LabelSet, float]]   # planted alpha2 last


def trading_calendar(start: date, n_days: int) -> list[date]:
    days = []
    cursor = start
    while len(days) < n_days:
        if cursor.weekday() < 5:
            days.append(cursor)
        cursor += timedelta(days=1)
    return days


def synthetic_market(n_firms: int = 20, n_days: int = 600,
                     events_per_firm: int = 2,
                     planted_alpha: dict[int, float] | None = None,
                     noise_sigma: float = 0.01, seed: int = 0) -> SyntheticMarket:
    """Daily panel with market-model returns and planted event jumps.

    Firm returns follow r_f + beta (r_m - r_f) + eps; on each event day the
    planted abnormal return (sum of its topics' effects) is added. Events are
    spread so every firm retains a full estimation window.
    """
    planted_alpha = planted_alpha or {10: 0.027, 12: -0.0875}
    rng = np.random.default_rng(seed)
    calendar = trading_calendar(date(2016, 1, 4), n_days)
    market = {d: float(rng.normal(0.0004, 0.009)) for d in calendar}
    risk_free = {d: 0.00005 for d in calendar}

    firm_returns: dict[str, dict[date, float]] = {}
    events: list[tuple[str, date, LabelSet, float]] = []
    topics = sorted(planted_alpha)
    for i in range(n_firms):
        firm = f"F{i:03d}"
        beta = 0.6 + 0.8 * rng.random()
        series: dict[date, float] = {}
        for d in calendar:
            series[d] = (
                risk_free[d]
                + beta * (market[d] - risk_free[d])
                + float(rng.normal(0.0, noise_sigma))
            )
        for j in range(events_per_firm):
            k = i * events_per_firm + j
            offset = (k * 11) % (n_days - 305)
            day = calendar[300 + offset]
            # mix of unlabeled, single-topic, and two-topic events so the
            # topic dummies are never an exhaustive partition
            if k % 5 == 4:
                ids = []
            elif k % 5 == 3 and len(topics) > 1:
                ids = [topics[k % len(topics)],
                       topics[(k + 1) % len(topics)]]
            else:
                ids = [topics[(i + j) % len(topics)]]
            labels = LabelSet.from_ids(ids)
            alpha2 = sum(planted_alpha[t] for t in ids)
            series[day] += alpha2
            events.append((firm, day, labels, alpha2))
        firm_returns[firm] = series
    return SyntheticMarket(firm_returns=firm_returns, market=market,
                           risk_free=risk_free, events=events)


def pair_support_events(n_retained_pairs: int = 116, support: int = 20,
                        below_support: int = 5, singles_per_topic: int = 20,
                        seed: int = 0) -> tuple[list[PanelEvent], list[tuple[int, int]]]:
    """Panel events engineered so exactly `n_retained_pairs` of the 190 topic
    pairs reach the support cutoff.

    Retained pairs receive `support` two-topic events each, the rest receive
    `below_support`; single-topic events anchor the main effects. Abnormal
    returns carry firm/year effects plus noise.
    """
    from itertools import combinations

    rng = np.random.default_rng(seed)
    all_pairs = list(combinations(range(NUM_TOPICS), 2))
    order = rng.permutation(len(all_pairs))
    retained = sorted(all_pairs[int(i)] for i in order[:n_retained_pairs])
    dropped = sorted(all_pairs[int(i)] for i in order[n_retained_pairs:])

    firms = [f"F{i:03d}" for i in range(50)]
    years = list(range(2010, 2020))
    firm_fx = {f: float(rng.normal(0, 0.01)) for f in firms}
    year_fx = {y: float(rng.normal(0, 0.005)) for y in years}
    topic_fx = rng.normal(0.0, 0.02, size=NUM_TOPICS)

    events: list[PanelEvent] = []

    def emit(labels: LabelSet) -> None:
        firm = firms[int(rng.integers(len(firms)))]
        year = years[int(rng.integers(len(years)))]
        ret = firm_fx[firm] + year_fx[year] + float(rng.normal(0, 0.01))
        for t in labels:
            ret += float(topic_fx[t])
        events.append(PanelEvent(firm_id=firm, year=year,
                                 abnormal_return=ret, labels=labels))

    for pair in retained:
        for _ in range(support):
            emit(LabelSet.from_ids(pair))
    for pair in dropped:
        for _ in range(below_support):
            emit(LabelSet.from_ids(pair))
    for t in range(NUM_TOPICS):
        for _ in range(singles_per_topic):
            emit(LabelSet.from_ids([t]))
    return events, retained


def write_pipeline_fixture(out_dir, seed: int = 0, n_sentences: int = 600,
                           annotators=("A1", "A2", "A3"),
                           train_seeds=(0, 1), epochs: int = 3) -> dict:
    """Write every input file the pipeline stages need, plus a config.

    Returns the configuration dict (also saved as config.yaml). All content is
    a pure function of `seed`.
    """
    from pathlib import Path

    import yaml

    from .annotation import GoldStandard, gold_to_csv, matrix_to_csv
    from .dataio import write_events, write_returns, write_series
    from .eventstudy import EventSpec
    from .labels import dump_taxonomy

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    dump_taxonomy(default_taxonomy(), out / "taxonomy.yaml")
    sc = synthetic_corpus(n_sentences=n_sentences, seed=seed)
    (out / "announcements.jsonl").write_text(
        "\n".join(sc.records) + "\n", encoding="utf-8")
    (out / "gold.csv").write_text(
        gold_to_csv(GoldStandard(labels=sc.gold)), encoding="utf-8")
    matrix = simulate_annotators(sc.gold, list(annotators), seed=seed + 1)
    (out / "annotations.csv").write_text(matrix_to_csv(matrix), encoding="utf-8")

    market = synthetic_market(seed=seed + 2)
    write_returns(out / "returns.csv", market.firm_returns)
    write_series(out / "market.csv", market.market, "return")
    write_series(out / "riskfree.csv", market.risk_free, "rate")
    write_events(out / "events.csv", [
        EventSpec(firm_id=f, event_date=d, labels=ls)
        for f, d, ls, _ in market.events
    ])

    cfg = {
        "seed": seed,
        "paths": {
            "taxonomy": str(out / "taxonomy.yaml"),
            "announcements": str(out / "announcements.jsonl"),
            "corpus": str(out / "out" / "corpus.jsonl"),
            "labels": str(out / "gold.csv"),
            "gold": str(out / "gold.csv"),
            "annotations": str(out / "annotations.csv"),
            "returns": str(out / "returns.csv"),
            "market": str(out / "market.csv"),
            "riskfree": str(out / "riskfree.csv"),
            "events": str(out / "events.csv"),
            "out_dir": str(out / "out"),
        },
        "allocate": {
            "per_topic_sentence_target": 1,
            "annotators": list(annotators),
        },
        "train": {
            "epochs": epochs,
            "seeds": list(train_seeds),
            "lr_min": 1e-3,
            "lr_max": 1e-2,
        },
    }
    with open(out / "config.yaml", "w", encoding="utf-8") as fh:
        yaml.safe_dump(cfg, fh, sort_keys=True)
    return cfg


@dataclass
class PanelDgp:
    events: list[PanelEvent]
    true_beta: float
    focal_topic: int


def panel_dgp(n_firms: int = 40, n_years: int = 8, true_beta: float = 0.027,
              focal_topic: int = 10, noise_sigma: float = 0.02,
              seed: int = 0) -> PanelDgp:
    """Balanced firm-year panel with one focal topic dummy of known effect.

    Every firm-year cell holds one event; the focal dummy switches on for half
    of them at random. Errors are iid on top of firm and year effects, so the
    clustered covariance stays conservative.
    """
    rng = np.random.default_rng(seed)
    firm_fx = rng.normal(0, 0.01, size=n_firms)
    year_fx = rng.normal(0, 0.01, size=n_years)
    events = []
    for i in range(n_firms):
        for j in range(n_years):
            on = rng.random() < 0.5
            labels = LabelSet.from_ids([focal_topic]) if on else EMPTY_LABELS
            ret = (
                float(firm_fx[i]) + float(year_fx[j])
                + (true_beta if on else 0.0)
                + float(rng.normal(0, noise_sigma))
            )
            events.append(PanelEvent(firm_id=f"F{i:03d}", year=2010 + j,
                                     abnormal_return=ret, labels=labels))
    return PanelDgp(events=events, true_beta=true_beta, focal_topic=focal_topic)
