"""Pipeline entry point.

Each subcommand reads a YAML config (plus `APP__SECTION__KEY` environment
overrides and a few direct flags), writes its outputs under the run directory,
and records a manifest with the config hash, the seed, and content digests of
all inputs and outputs, so reruns with identical inputs are byte-identical.

Exit codes: 0 success, 1 validation failure, 2 missing input, 3 internal error.
"""

from __future__ import annotations

import csv
import functools
import io
import json
import sys
from pathlib import Path

import click
import numpy as np

from . import agreement as agr
from . import classify as clf
from .annotation import (
    AllocationError,
    AnnotationValidationError,
    Annotator,
    GoldStandard,
    gold_from_csv,
    matrix_from_csv,
    allocate_balanced,
)
from .bm25 import Bm25Params, PrelabelConfigError, announcement_prelabels, prelabel_corpus
from .config import ConfigError, load_config
from .corpus import (
    IngestError,
    aggregate_to_document,
    cooccurrence_counts,
    corpus_stats,
    document_labels,
    ingest_corpus,
    read_corpus_file,
    serialize_corpus,
    stats_report_csv,
)
from .dataio import (
    MissingInputError,
    load_return_panel,
    read_events,
    split_announcements,
)
from .eventstudy import (
    fit_market_model,
    fits_from_csv,
    fits_to_csv,
    significance_split,
    topic_distribution,
)
from .labels import EMPTY_LABELS, NUM_TOPICS, TaxonomyError, default_taxonomy, load_taxonomy, topic_names
from .manifest import write_manifest
from .nn import NnModel, save_model
from .panel import (
    PanelDesignError,
    PanelEvent,
    build_design,
    fit_fe,
    interaction_matrix_csv,
    panel_report_csv,
)
from .text import build_vocabulary
from .training import TrainConfig, TrainingDiverged, lr_range_test, derive_bounds, train as train_model

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_MISSING_INPUT = 2
EXIT_INTERNAL = 3

_VALIDATION_ERRORS = (
    ConfigError, TaxonomyError, IngestError, AllocationError,
    AnnotationValidationError, PrelabelConfigError, PanelDesignError,
    TrainingDiverged, clf.ScoreValidationError, ValueError,
)


def _fail(code: int, message: str):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def pipeline_command(fn):
    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            fn(*args, **kwargs)
        except MissingInputError as exc:
            _fail(EXIT_MISSING_INPUT, str(exc))
        except FileNotFoundError as exc:
            _fail(EXIT_MISSING_INPUT, f"missing input file: {exc}")
        except _VALIDATION_ERRORS as exc:
            _fail(EXIT_VALIDATION, str(exc))
        except Exception as exc:   # noqa: BLE001 - map to the exit contract
            _fail(EXIT_INTERNAL, f"{type(exc).__name__}: {exc}")
    return wrapper


def _common_options(fn):
    fn = click.option("--config", "config_path", type=click.Path(), default=None,
                      help="YAML run configuration.")(fn)
    fn = click.option("--seed", type=int, default=None,
                      help="Override the global seed.")(fn)
    fn = click.option("--out-dir", type=click.Path(), default=None,
                      help="Override paths.out_dir.")(fn)
    return fn


def _load(config_path, seed, out_dir) -> dict:
    cfg = load_config(config_path)
    if seed is not None:
        cfg["seed"] = seed
    if out_dir is not None:
        cfg["paths"]["out_dir"] = out_dir
    Path(cfg["paths"]["out_dir"]).mkdir(parents=True, exist_ok=True)
    return cfg


def _require(cfg: dict, key: str, producer: str | None = None) -> Path:
    raw = cfg["paths"].get(key)
    if raw is None:
        hint = f"; produce it with `adhoc-topics {producer}`" if producer else ""
        raise MissingInputError(f"config paths.{key} is not set{hint}")
    path = Path(raw)
    if not path.exists():
        hint = f"; produce it with `adhoc-topics {producer}`" if producer else ""
        raise MissingInputError(f"missing input {path}{hint}")
    return path


def _taxonomy(cfg: dict):
    raw = cfg["paths"].get("taxonomy")
    if raw is None:
        return default_taxonomy()
    return load_taxonomy(_require(cfg, "taxonomy"))


def _write(path: Path, payload: str) -> Path:
    path.write_text(payload, encoding="utf-8")
    return path


@click.group()
def main():
    """Multi-label topic pipeline for announcement corpora."""


@main.command(epilog="Config keys: paths.announcements, paths.taxonomy, "
                     "paths.labels (optional), corpus.date_min, "
                     "corpus.date_max, paths.out_dir, seed.")
@_common_options
@pipeline_command
def ingest(config_path, seed, out_dir):
    """Ingest raw announcements into the canonical corpus plus a stats report."""
    from datetime import date as _date

    cfg = _load(config_path, seed, out_dir)
    out = Path(cfg["paths"]["out_dir"])
    announcements = _require(cfg, "announcements")
    taxonomy = _taxonomy(cfg)
    date_range = None
    if cfg["corpus"]["date_min"] is not None and cfg["corpus"]["date_max"] is not None:
        date_range = (_date.fromisoformat(str(cfg["corpus"]["date_min"])),
                      _date.fromisoformat(str(cfg["corpus"]["date_max"])))
    with open(announcements, "r", encoding="utf-8") as fh:
        corpus = ingest_corpus(fh, taxonomy, date_range=date_range)
    outputs = [_write(out / "corpus.jsonl", serialize_corpus(corpus))]

    labels = {}
    inputs = [announcements]
    if cfg["paths"].get("labels"):
        labels_path = _require(cfg, "labels")
        labels = gold_from_csv(labels_path.read_text(encoding="utf-8")).labels
        inputs.append(labels_path)
    stats = corpus_stats(corpus, labels)
    outputs.append(_write(out / "corpus_stats.csv", stats_report_csv(stats)))
    outputs.append(_write(
        out / "corpus_stats.json",
        json.dumps(stats.as_dict(), indent=2, sort_keys=True) + "\n",
    ))
    if labels:
        doc_labels = document_labels(corpus, labels)
        pairs = cooccurrence_counts(doc_labels.values())
        names = topic_names(taxonomy)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["topic_a", "topic_b", "count"])
        for (a, b), n in sorted(pairs.items(), key=lambda kv: (-kv[1], kv[0])):
            writer.writerow([names[a], names[b], n])
        outputs.append(_write(out / "cooccurrence.csv", buf.getvalue()))
    if corpus.rejected:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["line_number", "reason"])
        for rej in corpus.rejected:
            writer.writerow([rej.line_number, rej.reason])
        outputs.append(_write(out / "ingest_rejects.csv", buf.getvalue()))
        click.echo(f"rejected {len(corpus.rejected)} record(s); see ingest_rejects.csv")
    write_manifest(out, "ingest", cfg, cfg["seed"], inputs, outputs)
    click.echo(f"ingested {len(corpus)} announcements "
               f"({sum(len(a.sentences) for a in corpus.announcements)} sentences)")


@main.command(epilog="Config keys: paths.corpus, paths.taxonomy, bm25.k1, "
                     "bm25.b, bm25.score_threshold, paths.out_dir, seed.")
@_common_options
@pipeline_command
def prelabel(config_path, seed, out_dir):
    """Assign preliminary retrieval labels to every sentence."""
    cfg = _load(config_path, seed, out_dir)
    out = Path(cfg["paths"]["out_dir"])
    corpus_path = _require(cfg, "corpus", producer="ingest")
    corpus = read_corpus_file(corpus_path)
    taxonomy = _taxonomy(cfg)
    params = Bm25Params(
        k1=cfg["bm25"]["k1"], b=cfg["bm25"]["b"],
        score_threshold=cfg["bm25"]["score_threshold"],
    )
    from .bm25 import prelabel_dump_csv

    prelabels = prelabel_corpus(corpus, taxonomy, params)
    outputs = [_write(out / "prelabels.csv", prelabel_dump_csv(prelabels))]
    ann_pre = announcement_prelabels(corpus, prelabels)
    payload = {k: sorted(v) for k, v in sorted(ann_pre.items())}
    outputs.append(_write(out / "announcement_prelabels.json",
                          json.dumps(payload, indent=2, sort_keys=True) + "\n"))
    write_manifest(out, "prelabel", cfg, cfg["seed"], [corpus_path], outputs)
    labeled = sum(1 for p in prelabels.values() if p.topic_id is not None)
    click.echo(f"pre-labeled {labeled}/{len(prelabels)} sentences")


@main.command(epilog="Config keys: paths.corpus, paths.prelabels, paths.gold, "
                     "allocate.per_topic_sentence_target, allocate.shared_per_topic, "
                     "allocate.annotators, allocate.phase, allocate.topics, "
                     "paths.out_dir, seed.")
@_common_options
@pipeline_command
def allocate(config_path, seed, out_dir):
    """Draw the balanced per-annotator announcement assignment for a phase."""
    cfg = _load(config_path, seed, out_dir)
    out = Path(cfg["paths"]["out_dir"])
    corpus_path = _require(cfg, "corpus", producer="ingest")
    corpus = read_corpus_file(corpus_path)
    pre_path = Path(cfg["paths"].get("prelabels") or out / "announcement_prelabels.json")
    if not pre_path.exists():
        raise MissingInputError(
            f"missing {pre_path}; produce it with `adhoc-topics prelabel`"
        )
    ann_pre = {
        k: set(v)
        for k, v in json.loads(pre_path.read_text(encoding="utf-8")).items()
    }
    gold_path = _require(cfg, "gold")
    gold = gold_from_csv(gold_path.read_text(encoding="utf-8"))
    annotators = [Annotator(a) for a in cfg["allocate"]["annotators"]]
    plan = allocate_balanced(
        corpus,
        ann_pre,
        gold,
        annotators,
        per_topic_sentence_target=cfg["allocate"]["per_topic_sentence_target"],
        phase=cfg["allocate"]["phase"],
        shared_per_topic=cfg["allocate"]["shared_per_topic"],
        topics=cfg["allocate"]["topics"],
        seed=cfg["seed"],
    )
    payload = {
        "phase": plan.phase,
        "per_topic_target": plan.per_topic_target,
        "shared_announcements": list(plan.shared_announcements),
        "unique_assignments": {
            a: list(v) for a, v in sorted(plan.unique_assignments.items())
        },
    }
    outputs = [_write(out / "plan.json",
                      json.dumps(payload, indent=2, sort_keys=True) + "\n")]
    write_manifest(out, "allocate", cfg, cfg["seed"],
                   [corpus_path, pre_path, gold_path], outputs)
    click.echo(f"allocated {len(plan.shared_announcements)} shared plus "
               f"{sum(len(v) for v in plan.unique_assignments.values())} unique "
               f"announcements across {len(annotators)} annotators")


@main.command(epilog="Config keys: paths.corpus, paths.plan, paths.taxonomy, "
                     "serve.host, serve.port, serve.show_prelabels, "
                     "allocate.annotators.")
@_common_options
@pipeline_command
def serve(config_path, seed, out_dir):
    """Run the annotation HTTP service consumed by the workbench UI."""
    import uvicorn

    from .annotation import AnnotationStore, PhasePlan
    from .service import create_app

    cfg = _load(config_path, seed, out_dir)
    corpus_path = _require(cfg, "corpus", producer="ingest")
    corpus = read_corpus_file(corpus_path)
    plan = None
    if cfg["paths"].get("plan"):
        raw = json.loads(_require(cfg, "plan", producer="allocate")
                         .read_text(encoding="utf-8"))
        plan = PhasePlan(
            phase=raw["phase"],
            shared_announcements=tuple(raw["shared_announcements"]),
            unique_assignments={k: tuple(v)
                                for k, v in raw["unique_assignments"].items()},
            per_topic_target=raw["per_topic_target"],
        )
    annotators = [Annotator(a) for a in cfg["allocate"]["annotators"]]
    store = AnnotationStore(corpus, plan=plan, annotators=annotators)
    dashboard = None
    dash_path = Path(cfg["paths"]["out_dir"]) / "dashboard.json"
    if dash_path.exists():
        dashboard = json.loads(dash_path.read_text(encoding="utf-8"))
    app = create_app(store, _taxonomy(cfg), dashboard=dashboard,
                     show_prelabels=cfg["serve"]["show_prelabels"])
    uvicorn.run(app, host=cfg["serve"]["host"], port=cfg["serve"]["port"])


@main.command(name="agreement",
              epilog="Config keys: paths.corpus, paths.annotations, paths.gold, "
                     "agreement.min_topic_support, paths.out_dir, seed.")
@_common_options
@pipeline_command
def agreement_cmd(config_path, seed, out_dir):
    """Annotator-vs-gold metrics and inter-annotator agreement tables."""
    cfg = _load(config_path, seed, out_dir)
    out = Path(cfg["paths"]["out_dir"])
    corpus_path = _require(cfg, "corpus", producer="ingest")
    corpus = read_corpus_file(corpus_path)
    annotations_path = _require(cfg, "annotations")
    gold_path = _require(cfg, "gold")
    sentence_matrix = matrix_from_csv(annotations_path.read_text(encoding="utf-8"))
    gold = gold_from_csv(gold_path.read_text(encoding="utf-8"))
    names = topic_names(_taxonomy(cfg))
    min_support = cfg["agreement"]["min_topic_support"]

    sentence_support = {t: 0 for t in range(NUM_TOPICS)}
    for ls in gold.labels.values():
        for t in ls:
            sentence_support[t] += 1

    ann_of = corpus.announcement_of()
    doc_matrix = {}
    for annotator, items in sentence_matrix.items():
        per_doc = {}
        for sid, ls in items.items():
            per_doc.setdefault(ann_of[sid], []).append(ls)
        doc_matrix[annotator] = {
            doc: aggregate_to_document(parts) for doc, parts in per_doc.items()
        }
    doc_gold = {}
    for sid, ls in gold.labels.items():
        doc_gold.setdefault(ann_of[sid], []).append(ls)
    doc_gold = {doc: aggregate_to_document(parts) for doc, parts in doc_gold.items()}

    reports = {
        "sentence": agr.annotator_performance(
            sentence_matrix, gold.labels, min_support, sentence_support),
        "document": agr.annotator_performance(
            doc_matrix, doc_gold, min_support, sentence_support),
    }
    kappas = {
        "sentence": agr.kappa_report(
            sentence_matrix, reports["sentence"].scored_topics),
        "document": agr.kappa_report(
            doc_matrix, reports["document"].scored_topics),
    }

    # annotator columns sorted by decreasing F1, metric rows, level panels
    ann_buf = io.StringIO()
    writer = csv.writer(ann_buf, lineterminator="\n")
    for level, report in reports.items():
        columns = [a for a, _ in sorted(report.per_annotator.items(),
                                        key=lambda kv: (-kv[1][2], kv[0]))]
        avg = [
            sum(v[i] for v in report.per_annotator.values()) / len(report.per_annotator)
            for i in range(3)
        ]
        writer.writerow(["level", "metric"] + columns + ["Avg."])
        for i, metric in enumerate(("precision", "recall", "f1")):
            writer.writerow(
                [level, metric]
                + [repr(report.per_annotator[a][i]) for a in columns]
                + [repr(avg[i])]
            )
        writer.writerow([level, "num"]
                        + [report.n_items[a] for a in columns]
                        + [max(report.n_items.values())])

    topic_buf = io.StringIO()
    writer = csv.writer(topic_buf, lineterminator="\n")
    writer.writerow(["level", "topic", "num", "precision", "recall", "f1"])
    for level, report in reports.items():
        support = sentence_support if level == "sentence" else {
            t: sum(1 for ls in doc_gold.values() if t in ls)
            for t in range(NUM_TOPICS)
        }
        for t in report.scored_topics:
            p, r, f1 = report.per_topic[t]
            writer.writerow([level, names[t], support[t], repr(p), repr(r), repr(f1)])

    kappa_buf = io.StringIO()
    writer = csv.writer(kappa_buf, lineterminator="\n")
    writer.writerow(["topic", "sentence", "sentence_band", "document",
                     "document_band"])
    for t in kappas["sentence"].per_topic:
        row = [names[t], repr(kappas["sentence"].per_topic[t]),
               kappas["sentence"].bands[t]]
        if t in kappas["document"].per_topic:
            row += [repr(kappas["document"].per_topic[t]),
                    kappas["document"].bands[t]]
        else:
            row += ["", ""]
        writer.writerow(row)
    writer.writerow(["Avg.", repr(kappas["sentence"].average),
                     kappas["sentence"].average_band,
                     repr(kappas["document"].average),
                     kappas["document"].average_band])

    pairs = cooccurrence_counts(doc_gold.values())
    top_pairs = sorted(pairs.items(), key=lambda kv: (-kv[1], kv[0]))[:10]
    dashboard = {
        "topics": names,
        "annotator_metrics": {
            level: {
                a: {"precision": v[0], "recall": v[1], "f1": v[2],
                    "num": reports[level].n_items[a]}
                for a, v in reports[level].per_annotator.items()
            }
            for level in reports
        },
        "topic_metrics": {
            level: {
                names[t]: {"precision": v[0], "recall": v[1], "f1": v[2]}
                for t, v in reports[level].per_topic.items()
            }
            for level in reports
        },
        "fleiss_kappa": {
            level: {
                names[t]: {"kappa": kappas[level].per_topic[t],
                           "band": kappas[level].bands[t]}
                for t in kappas[level].per_topic
            }
            for level in kappas
        },
        "fleiss_kappa_average": {
            level: {"kappa": kappas[level].average,
                    "band": kappas[level].average_band}
            for level in kappas
        },
        "cooccurrence_top10": [
            {"topic_a": names[a], "topic_b": names[b], "count": n}
            for (a, b), n in top_pairs
        ],
    }

    outputs = [
        _write(out / "annotator_metrics.csv", ann_buf.getvalue()),
        _write(out / "topic_metrics.csv", topic_buf.getvalue()),
        _write(out / "fleiss_kappa.csv", kappa_buf.getvalue()),
        _write(out / "dashboard.json",
               json.dumps(dashboard, indent=2, sort_keys=True) + "\n"),
    ]
    write_manifest(out, "agreement", cfg, cfg["seed"],
                   [corpus_path, annotations_path, gold_path], outputs)
    click.echo(
        "agreement: sentence kappa avg "
        f"{kappas['sentence'].average:.3f} ({kappas['sentence'].average_band}), "
        f"document kappa avg {kappas['document'].average:.3f}"
    )


@main.command(epilog="Config keys: paths.corpus, paths.gold, train.batch_size, "
                     "train.epochs, train.lr_min, train.lr_max, train.beta1_min, "
                     "train.beta1_max, train.beta2, train.vocab_size, train.seeds, "
                     "train.level, train.test_fraction, train.range_test, "
                     "paths.out_dir, seed.")
@_common_options
@click.option("--level", type=click.Choice(["sentence", "document"]), default=None,
              help="Override train.level.")
@pipeline_command
def train(config_path, seed, out_dir, level):
    """Train the feed-forward baseline across seeds and score the test split."""
    cfg = _load(config_path, seed, out_dir)
    if level:
        cfg["train"]["level"] = level
    out = Path(cfg["paths"]["out_dir"])
    corpus_path = _require(cfg, "corpus", producer="ingest")
    corpus = read_corpus_file(corpus_path)
    gold_path = _require(cfg, "gold")
    gold = gold_from_csv(gold_path.read_text(encoding="utf-8")).labels

    items, texts, targets = _training_items(corpus, gold, cfg["train"]["level"])
    train_ids, test_ids = split_announcements(
        [a.id for a in corpus.announcements],
        cfg["train"]["test_fraction"], cfg["seed"],
    )
    train_set = set(train_ids)
    ann_of = corpus.announcement_of()

    def _owner(item_id: str) -> str:
        return ann_of.get(item_id, item_id)

    train_idx = [i for i, item in enumerate(items) if _owner(item) in train_set]
    test_idx = [i for i, item in enumerate(items) if _owner(item) not in train_set]
    if not train_idx or not test_idx:
        raise ValueError("train/test split produced an empty side")

    vocab = build_vocabulary((texts[i] for i in train_idx),
                             cfg["train"]["vocab_size"])
    encoded = [vocab.encode_text(t) for t in texts]
    y = np.asarray(targets, dtype=float)

    tc = TrainConfig(
        batch_size=cfg["train"]["batch_size"],
        epochs=cfg["train"]["epochs"],
        lr_min=cfg["train"]["lr_min"],
        lr_max=cfg["train"]["lr_max"],
        beta1_min=cfg["train"]["beta1_min"],
        beta1_max=cfg["train"]["beta1_max"],
        beta2=cfg["train"]["beta2"],
        threshold=cfg["train"]["threshold"],
        vocab_size=cfg["train"]["vocab_size"],
        seeds=tuple(cfg["train"]["seeds"]),
    )
    train_inputs = [encoded[i] for i in train_idx]
    train_targets = y[train_idx]
    if cfg["train"]["range_test"]:
        probe = NnModel.init(len(vocab), seed=tc.seeds[0])
        result = lr_range_test(probe, train_inputs, train_targets,
                               lr_lo=1e-5, lr_hi=0.5, steps=60,
                               batch_size=tc.batch_size, seed=cfg["seed"])
        tc = derive_bounds(tc, result)
        click.echo(f"range test suggests lr in [{tc.lr_min:.2e}, {tc.lr_max:.2e}]")

    names = topic_names(_taxonomy(cfg))
    outputs = []
    loss_rows = ["seed,step,loss,lr"]
    for s in tc.seeds:
        model = NnModel.init(len(vocab), seed=s)
        result = train_model(model, train_inputs, train_targets, tc, seed=s)
        model_path = out / f"model_seed{s}.npz"
        save_model(model, model_path)
        outputs.append(model_path)
        for step, (loss, lr) in enumerate(zip(result.loss_trace, result.lr_trace)):
            loss_rows.append(f"{s},{step},{loss!r},{lr!r}")
        test_items = [items[i] for i in test_idx]
        scores = model.forward([encoded[i] for i in test_idx], training=False)
        outputs.append(_write(out / f"scores_seed{s}.csv",
                              clf.export_scores(test_items, scores, names)))
        click.echo(f"seed {s}: final loss {result.loss_trace[-1]:.4f}")
    outputs.append(_write(out / "loss_trace.csv", "\n".join(loss_rows) + "\n"))
    vocab_payload = json.dumps(vocab.token_to_id, sort_keys=True) + "\n"
    outputs.append(_write(out / "vocabulary.json", vocab_payload))
    split_payload = json.dumps({"train": train_ids, "test": test_ids},
                               indent=2, sort_keys=True) + "\n"
    outputs.append(_write(out / "split.json", split_payload))
    write_manifest(out, "train", cfg, cfg["seed"], [corpus_path, gold_path],
                   outputs)


def _training_items(corpus, gold, level):
    items, texts, targets = [], [], []
    if level == "sentence":
        for s in corpus.sentences():
            items.append(s.id)
            texts.append(s.text)
            targets.append(_multi_hot(gold.get(s.id, EMPTY_LABELS)))
    else:
        doc_gold = document_labels(corpus, gold)
        for ann in corpus.announcements:
            items.append(ann.id)
            texts.append(ann.text)
            targets.append(_multi_hot(doc_gold[ann.id]))
    return items, texts, targets


def _multi_hot(labels) -> list[float]:
    row = [0.0] * NUM_TOPICS
    for t in labels:
        row[t] = 1.0
    return row


@main.command(epilog="Config keys: paths.corpus, paths.gold, paths.scores "
                     "(external matrix; default: trained score files in "
                     "paths.out_dir), train.threshold, paths.out_dir, seed.")
@_common_options
@click.option("--level", type=click.Choice(["sentence", "document"]),
              default="document", help="Evaluation aggregation level.")
@click.option("--threshold", type=float, default=None,
              help="Override train.threshold.")
@click.option("--sweep", is_flag=True,
              help="Also sweep the default threshold grid (first seed run).")
@pipeline_command
def evaluate(config_path, seed, out_dir, level, threshold, sweep):
    """Thresholded multi-seed evaluation against the gold labels."""
    cfg = _load(config_path, seed, out_dir)
    out = Path(cfg["paths"]["out_dir"])
    corpus_path = _require(cfg, "corpus", producer="ingest")
    corpus = read_corpus_file(corpus_path)
    gold_path = _require(cfg, "gold")
    gold = gold_from_csv(gold_path.read_text(encoding="utf-8")).labels
    thr = threshold if threshold is not None else cfg["train"]["threshold"]

    if cfg["paths"].get("scores"):
        score_files = [_require(cfg, "scores")]
    else:
        score_files = sorted(out.glob("scores_seed*.csv"))
        if not score_files:
            raise MissingInputError(
                f"no score files under {out}; produce them with "
                "`adhoc-topics train` or point paths.scores at an external matrix"
            )

    known = {s.id for s in corpus.sentences()} | {a.id for a in corpus.announcements}
    ann_of = corpus.announcement_of()
    runs = []
    all_rejects = []
    first_scores = None
    training_level = cfg["train"]["level"]
    for path in score_files:
        ingested = clf.ingest_external_scores(path.read_text(encoding="utf-8"),
                                              known_ids=known)
        all_rejects.extend((path.name, line, reason)
                           for line, reason in ingested.rejected)
        if first_scores is None:
            first_scores = dict(zip(ingested.ids, ingested.matrix))
        labels = dict(zip(ingested.ids,
                          clf.predict(ingested.matrix, thr)))
        if level == "document":
            sentence_items = {i: l for i, l in labels.items() if i in ann_of}
            doc_items = {i: l for i, l in labels.items() if i not in ann_of}
            if sentence_items:
                merged = clf.aggregate_predictions(sentence_items, ann_of)
                for doc, ls in merged.items():
                    doc_items[doc] = doc_items.get(doc, EMPTY_LABELS) | ls
            labels = doc_items
        runs.append(labels)

    if level == "document":
        eval_gold = {}
        for sid, ls in gold.items():
            doc = ann_of.get(sid)
            if doc is not None:
                eval_gold[doc] = eval_gold.get(doc, EMPTY_LABELS) | ls
    else:
        eval_gold = gold

    report = clf.evaluate_multiseed(runs, eval_gold, level=level,
                                    training_level=training_level)
    names = topic_names(_taxonomy(cfg))
    outputs = [_write(out / f"eval_report_{level}.csv",
                      clf.eval_report_csv(report, names))]
    payload = {
        "level": level,
        "training_level": training_level,
        "threshold": thr,
        "n_seeds": report.n_seeds,
        "macro": {"precision": report.macro_mean[0],
                  "recall": report.macro_mean[1],
                  "f1": report.macro_mean[2],
                  "f1_std": report.macro_std[2]},
        "micro": {"precision": report.micro_mean[0],
                  "recall": report.micro_mean[1],
                  "f1": report.micro_mean[2],
                  "f1_std": report.micro_std[2]},
        "per_topic_f1": {names[t]: report.per_topic_f1_mean[t]
                         for t in range(NUM_TOPICS)},
        "support": {names[t]: report.support[t] for t in range(NUM_TOPICS)},
    }
    outputs.append(_write(out / f"eval_report_{level}.json",
                          json.dumps(payload, indent=2, sort_keys=True) + "\n"))
    if all_rejects:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["file", "line_number", "reason"])
        for row in all_rejects:
            writer.writerow(row)
        outputs.append(_write(out / "score_rejects.csv", buf.getvalue()))
    if sweep and first_scores:
        # scores may be keyed by sentences or documents; match whichever
        merged_gold = dict(gold)
        if level == "document":
            merged_gold.update(eval_gold)
        item_gold = {i: merged_gold[i] for i in first_scores if i in merged_gold}
        if item_gold:
            buf = io.StringIO()
            writer = csv.writer(buf, lineterminator="\n")
            writer.writerow(["threshold", "macro_f1", "micro_f1"])
            for t, macro_f1, micro_f1 in clf.threshold_sweep(first_scores,
                                                             item_gold):
                writer.writerow([repr(t), repr(macro_f1), repr(micro_f1)])
            outputs.append(_write(out / "threshold_sweep.csv", buf.getvalue()))
    write_manifest(out, "evaluate", cfg, cfg["seed"],
                   [corpus_path, gold_path] + score_files, outputs)
    click.echo(f"macro F1 {report.macro_mean[2]:.4f} "
               f"(std {report.macro_std[2]:.4f}) at threshold {thr}")


@main.command(epilog="Config keys: paths.returns, paths.market, paths.riskfree, "
                     "paths.events, eventstudy.window, eventstudy.min_obs, "
                     "eventstudy.significance_level, paths.out_dir, seed.")
@_common_options
@pipeline_command
def eventstudy(config_path, seed, out_dir):
    """Market-model abnormal returns with per-topic summaries."""
    cfg = _load(config_path, seed, out_dir)
    out = Path(cfg["paths"]["out_dir"])
    returns_path = _require(cfg, "returns")
    market_path = _require(cfg, "market")
    riskfree_path = _require(cfg, "riskfree")
    events_path = _require(cfg, "events")
    panel = load_return_panel(returns_path, market_path, riskfree_path)
    events = read_events(events_path)
    fits, excluded = fit_market_model(
        panel, events,
        window=cfg["eventstudy"]["window"],
        min_obs=cfg["eventstudy"]["min_obs"],
    )
    if not fits:
        raise ValueError("no events survived the estimation-window filters")
    outputs = [_write(out / "event_fits.csv", fits_to_csv(fits))]

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["firm_id", "date", "reason"])
    for ex in sorted(excluded, key=lambda e: (e.firm_id, e.event_date)):
        writer.writerow([ex.firm_id, ex.event_date.isoformat(), ex.reason])
    outputs.append(_write(out / "event_excluded.csv", buf.getvalue()))

    names = topic_names(_taxonomy(cfg))
    percentiles = topic_distribution(fits)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["topic", "p5", "p25", "p50", "p75", "p95"])
    for t, row in percentiles.items():
        writer.writerow([names[t]] + [repr(row[k])
                                      for k in ("p5", "p25", "p50", "p75", "p95")])
    outputs.append(_write(out / "topic_percentiles.csv", buf.getvalue()))

    split = significance_split(fits, cfg["eventstudy"]["significance_level"])
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["topic", "positive", "negative", "n_events"])
    for t in sorted(split.n_events):
        writer.writerow([names[t], repr(split.positive[t]),
                         repr(split.negative[t]), split.n_events[t]])
    outputs.append(_write(out / "significance_split.csv", buf.getvalue()))
    write_manifest(out, "eventstudy", cfg, cfg["seed"],
                   [returns_path, market_path, riskfree_path, events_path],
                   outputs)
    click.echo(f"fitted {len(fits)} events; excluded {len(excluded)}")


@main.command(epilog="Config keys: paths.fits (default: event_fits.csv from "
                     "eventstudy), panel.min_pair_support, panel.cluster, "
                     "paths.out_dir, seed.")
@_common_options
@pipeline_command
def panel(config_path, seed, out_dir):
    """Two-way fixed-effects regression of abnormal returns on topic dummies."""
    cfg = _load(config_path, seed, out_dir)
    out = Path(cfg["paths"]["out_dir"])
    fits_path = Path(cfg["paths"].get("fits") or out / "event_fits.csv")
    if not fits_path.exists():
        raise MissingInputError(
            f"missing {fits_path}; produce it with `adhoc-topics eventstudy`"
        )
    fits = fits_from_csv(fits_path.read_text(encoding="utf-8"))
    events = [
        PanelEvent(firm_id=f.firm_id, year=f.event_date.year,
                   abnormal_return=f.alpha2, labels=f.labels)
        for f in fits
    ]
    names = topic_names(_taxonomy(cfg))
    cluster = tuple(cfg["panel"]["cluster"])
    design_plain = build_design(events, names, interactions=False)
    result_plain = fit_fe(design_plain, cluster)
    design_inter = build_design(events, names,
                                min_pair_support=cfg["panel"]["min_pair_support"])
    result_inter = fit_fe(design_inter, cluster)

    outputs = [
        _write(out / "panel_report.csv",
               panel_report_csv(result_plain, result_inter, names)),
        _write(out / "interactions.csv",
               interaction_matrix_csv(result_inter, names)),
    ]
    write_manifest(out, "panel", cfg, cfg["seed"], [fits_path], outputs)
    click.echo(
        f"panel: {result_plain.n_regressors} regressors without interactions, "
        f"{result_inter.n_regressors} with "
        f"(within R2 {result_plain.within_r2:.4f} / {result_inter.within_r2:.4f})"
    )


@main.command(epilog="Config keys: paths.out_dir.")
@_common_options
@pipeline_command
def report(config_path, seed, out_dir):
    """Aggregate the run manifests of completed stages into one summary."""
    cfg = _load(config_path, seed, out_dir)
    out = Path(cfg["paths"]["out_dir"])
    manifests = sorted(p for p in out.glob("*_manifest.json")
                       if p.name != "report_manifest.json")
    if not manifests:
        raise MissingInputError(
            f"no run manifests under {out}; run pipeline stages first "
            "(ingest, prelabel, allocate, agreement, train, evaluate, "
            "eventstudy, panel)"
        )
    summary = {}
    for path in manifests:
        payload = json.loads(path.read_text(encoding="utf-8"))
        summary[payload["command"]] = payload
    outputs = [_write(out / "report.json",
                      json.dumps(summary, indent=2, sort_keys=True) + "\n")]
    lines = ["# Pipeline report", ""]
    for command in sorted(summary):
        m = summary[command]
        lines.append(f"## {command}")
        lines.append(f"- config hash: `{m['config_hash'][:16]}`  seed: {m['seed']}")
        for out_path in sorted(m["outputs"]):
            lines.append(f"- `{out_path}` `{m['outputs'][out_path][:16]}`")
        lines.append("")
    outputs.append(_write(out / "report.md", "\n".join(lines) + "\n"))
    write_manifest(out, "report", cfg, cfg["seed"], manifests, outputs)
    click.echo(f"report covers {len(summary)} stage(s)")


if __name__ == "__main__":
    main()
