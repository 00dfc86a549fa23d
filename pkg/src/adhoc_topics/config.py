"""Run configuration: a single YAML file with environment-variable overrides.

Any key can be overridden with `APP__SECTION__KEY=value` (values parsed as
YAML scalars), e.g. `APP__TRAIN__EPOCHS=2` or `APP__BM25__K1=1.5`.
"""

from __future__ import annotations

import copy
import hashlib
import json
import os

import yaml

ENV_PREFIX = "APP__"

DEFAULT_CONFIG: dict = {
    "seed": 0,
    "paths": {
        "taxonomy": None,
        "announcements": None,
        "corpus": None,
        "labels": None,
        "annotations": None,
        "gold": None,
        "prelabels": None,
        "plan": None,
        "returns": None,
        "market": None,
        "riskfree": None,
        "events": None,
        "fits": None,
        "scores": None,
        "out_dir": "out",
    },
    "corpus": {"date_min": None, "date_max": None},
    "bm25": {"k1": 1.2, "b": 0.75, "score_threshold": 0.0},
    "allocate": {
        "per_topic_sentence_target": 50,
        "shared_per_topic": 1,
        "annotators": ["A1", "A2", "A3", "A4", "A5", "A6", "A7", "A8", "A9"],
        "phase": 2,
        "topics": None,
    },
    "train": {
        "batch_size": 6,
        "epochs": 4,
        "lr_min": 1e-3,
        "lr_max": 1e-2,
        "beta1_min": 0.85,
        "beta1_max": 0.95,
        "beta2": 0.999,
        "vocab_size": 20000,
        "seeds": [0, 1, 2, 3, 4, 5, 6, 7],
        "threshold": 0.6,
        "level": "sentence",
        "test_fraction": 0.2,
        "range_test": False,
    },
    "agreement": {"min_topic_support": 0, "level": "sentence"},
    "eventstudy": {"window": 250, "min_obs": 73, "significance_level": 0.10},
    "panel": {"min_pair_support": 20, "cluster": ["firm", "year"]},
    "serve": {"host": "127.0.0.1", "port": 8008, "show_prelabels": False},
}


class ConfigError(ValueError):
    """Configuration fails validation."""


def _deep_merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _env_overrides(environ=None) -> dict:
    environ = os.environ if environ is None else environ
    out: dict = {}
    for key, raw in environ.items():
        if not key.startswith(ENV_PREFIX):
            continue
        path = key[len(ENV_PREFIX):].lower().split("__")
        node = out
        for part in path[:-1]:
            node = node.setdefault(part, {})
        node[path[-1]] = yaml.safe_load(raw)
    return out


def load_config(path=None, environ=None) -> dict:
    """Defaults <- YAML file <- environment overrides, deep-merged."""
    cfg = copy.deepcopy(DEFAULT_CONFIG)
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            file_cfg = yaml.safe_load(fh) or {}
        if not isinstance(file_cfg, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        cfg = _deep_merge(cfg, file_cfg)
    cfg = _deep_merge(cfg, _env_overrides(environ))
    validate_config(cfg)
    return cfg


def validate_config(cfg: dict) -> None:
    bm25 = cfg["bm25"]
    if bm25["k1"] <= 0:
        raise ConfigError("bm25.k1 must be > 0")
    if not 0 <= bm25["b"] <= 1:
        raise ConfigError("bm25.b must be in [0, 1]")
    if bm25["score_threshold"] < 0:
        raise ConfigError("bm25.score_threshold must be >= 0")
    train = cfg["train"]
    if train["lr_min"] >= train["lr_max"]:
        raise ConfigError("train.lr_min must be below train.lr_max")
    if not 0 < train["threshold"] < 1:
        raise ConfigError("train.threshold must lie in (0, 1)")
    if cfg["eventstudy"]["min_obs"] < 2:
        raise ConfigError("eventstudy.min_obs must be at least 2")
    if cfg["panel"]["min_pair_support"] < 0:
        raise ConfigError("panel.min_pair_support must be >= 0")
    for dim in cfg["panel"]["cluster"]:
        if dim not in ("firm", "year"):
            raise ConfigError(f"panel.cluster entries must be firm/year, got {dim!r}")


def config_hash(cfg: dict) -> str:
    canonical = json.dumps(cfg, sort_keys=True, default=str)
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
