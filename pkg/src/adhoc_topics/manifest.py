"""Run manifests for bit-reproducible reruns.

Each subcommand records the configuration hash, seed, package version, and
content digests of its inputs and outputs. Manifests carry no timestamps, so a
rerun with identical inputs produces a byte-identical manifest.
"""

from __future__ import annotations

import hashlib
import json
from importlib.metadata import PackageNotFoundError, version
from pathlib import Path

from .config import config_hash


def _package_version() -> str:
    try:
        return version("adhoc-topics")
    except PackageNotFoundError:
        return "unknown"


def file_digest(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            h.update(chunk)
    return h.hexdigest()


def write_manifest(out_dir, command: str, cfg: dict, seed: int,
                   inputs: list, outputs: list) -> Path:
    # Manifests must not depend on where the run directory happens to live:
    # files are recorded by basename, and the config hash skips the paths
    # block (its content is already pinned by the input digests).
    cfg_for_hash = {k: v for k, v in cfg.items() if k != "paths"}
    manifest = {
        "command": command,
        "config_hash": config_hash(cfg_for_hash),
        "seed": seed,
        "package_version": _package_version(),
        "inputs": {
            Path(p).name: file_digest(p) for p in sorted(str(x) for x in inputs)
        },
        "outputs": {
            Path(p).name: file_digest(p) for p in sorted(str(x) for x in outputs)
        },
    }
    path = Path(out_dir) / f"{command}_manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n",
                    encoding="utf-8")
    return path
