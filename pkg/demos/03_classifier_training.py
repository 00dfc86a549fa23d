"""Classifier walkthrough: range test, one-cycle training, thresholding,
and the multi-seed evaluation harness.

Trains the bag-of-embeddings baseline on a separable synthetic corpus at
sentence level, aggregates predictions to documents, and contrasts that with
training directly on documents.
"""

import numpy as np

from adhoc_topics.classify import (
    aggregate_predictions,
    evaluate_multiseed,
    predict,
)
from adhoc_topics.corpus import document_labels
from adhoc_topics.dataio import split_announcements
from adhoc_topics.labels import NUM_TOPICS, default_taxonomy, topic_names
from adhoc_topics.nn import NnModel
from adhoc_topics.synth import synthetic_corpus
from adhoc_topics.text import build_vocabulary
from adhoc_topics.training import TrainConfig, lr_range_test, one_cycle, train

names = topic_names(default_taxonomy())

sc = synthetic_corpus(n_sentences=2000, seed=7)
corpus, gold = sc.corpus, sc.gold
train_ids, test_ids = split_announcements(
    [a.id for a in corpus.announcements], test_fraction=0.2, seed=0)
train_set = set(train_ids)
ann_of = corpus.announcement_of()

sentences = list(corpus.sentences())
train_sents = [s for s in sentences if s.announcement_id in train_set]
test_sents = [s for s in sentences if s.announcement_id not in train_set]
vocab = build_vocabulary((s.text for s in train_sents))
print(f"vocabulary: {len(vocab)} tokens (cap 20,000, built on the train split)")


def multi_hot(labels):
    row = np.zeros(NUM_TOPICS)
    for t in labels:
        row[t] = 1.0
    return row


x_train = [vocab.encode_text(s.text) for s in train_sents]
y_train = np.array([multi_hot(gold[s.id]) for s in train_sents])

# --- learning-rate range test ------------------------------------------------
probe = NnModel.init(len(vocab), seed=0)
range_result = lr_range_test(probe, x_train, y_train,
                             lr_lo=1e-5, lr_hi=0.5, steps=40)
print(f"range test suggests lr in [{range_result.suggested_min:.2e}, "
      f"{range_result.suggested_max:.2e}]"
      + (" (diverged, curve truncated)" if range_result.diverged else ""))

cfg = TrainConfig(batch_size=6, epochs=4,
                  lr_min=range_result.suggested_min,
                  lr_max=range_result.suggested_max,
                  threshold=0.6)

# --- the one-cycle schedule ---------------------------------------------------
total = cfg.epochs * ((len(x_train) + cfg.batch_size - 1) // cfg.batch_size)
points = [0, total // 4, total // 2, 3 * total // 4, total]
print("one-cycle schedule (lr, beta1):")
for t in points:
    lr = one_cycle(t, total, cfg.lr_min, cfg.lr_max)
    b1 = one_cycle(t, total, cfg.beta1_max, cfg.beta1_min)
    print(f"  step {t:>5}: lr {lr:.2e}  beta1 {b1:.3f}")

# --- multi-seed training on sentences -----------------------------------------
runs = []
for seed in (0, 1, 2):
    model = NnModel.init(len(vocab), seed=seed)
    result = train(model, x_train, y_train, cfg, seed=seed)
    scores = model.forward([vocab.encode_text(s.text) for s in test_sents])
    sent_pred = dict(zip((s.id for s in test_sents),
                         predict(scores, cfg.threshold)))
    runs.append(aggregate_predictions(sent_pred, ann_of))
    print(f"seed {seed}: loss {result.loss_trace[0]:.3f} -> "
          f"{result.loss_trace[-1]:.4f} over {result.total_steps} steps")

doc_gold_all = document_labels(corpus, gold)
doc_gold = {d: doc_gold_all[d] for d in runs[0]}
report = evaluate_multiseed(runs, doc_gold, level="document",
                            training_level="sentence")
print(f"\nsentence-trained, document-aggregated: "
      f"macro F1 {report.macro_mean[2]:.4f} (std {report.macro_std[2]:.4f}), "
      f"micro F1 {report.micro_mean[2]:.4f}")

worst = sorted(report.per_topic_f1_mean.items(), key=lambda kv: kv[1])[:3]
print("hardest topics:", ", ".join(f"{names[t]} {v:.3f}" for t, v in worst))

# --- document-level training for contrast -------------------------------------
docs_train = [a for a in corpus.announcements if a.id in train_set]
docs_test = [a for a in corpus.announcements if a.id not in train_set]
model = NnModel.init(len(vocab), seed=0)
train(model, [vocab.encode_text(a.text) for a in docs_train],
      np.array([multi_hot(doc_gold_all[a.id]) for a in docs_train]), cfg, seed=0)
scores = model.forward([vocab.encode_text(a.text) for a in docs_test])
doc_pred = dict(zip((a.id for a in docs_test), predict(scores, cfg.threshold)))
doc_report = evaluate_multiseed([doc_pred],
                                {d: doc_gold_all[d] for d in doc_pred},
                                level="document", training_level="document")
print(f"document-trained:                      "
      f"macro F1 {doc_report.macro_mean[2]:.4f} "
      f"(drop of {report.macro_mean[2] - doc_report.macro_mean[2]:.4f} "
      "vs sentence-level training)")
