"""Multi-label topic analysis of firm announcement corpora.

Subpackages cover the full pipeline: corpus ingestion and statistics, BM25
pre-labeling, annotation session design with agreement analytics, a native
feed-forward multi-label classifier with a one-cycle Adam trainer, and
market-model event studies with fixed-effects panel regressions on top.
"""

from .labels import EMPTY_LABELS, NUM_TOPICS, LabelSet, Topic, default_taxonomy

__all__ = [
    "EMPTY_LABELS",
    "NUM_TOPICS",
    "LabelSet",
    "Topic",
    "default_taxonomy",
]

__version__ = "0.1.0"
