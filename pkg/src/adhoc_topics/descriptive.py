"""Nearest-rank percentiles and eight-number summaries.

Percentiles use the nearest-rank method throughout: the p-th percentile of n
sorted values is the value at rank ceil(p/100 * n), 1-indexed. For even n the
median is therefore the lower of the two central values, not their mean. The
standard deviation is the population standard deviation (ddof=0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


def nearest_rank(values, p: float) -> float:
    """Nearest-rank percentile; p in [0, 100]."""
    if not 0 <= p <= 100:
        raise ValueError(f"percentile out of range: {p}")
    arr = np.sort(np.asarray(values, dtype=float))
    if arr.size == 0:
        raise ValueError("percentile of empty data")
    rank = max(1, math.ceil(p / 100.0 * arr.size))
    return float(arr[rank - 1])


@dataclass(frozen=True)
class SummaryRow:
    count: int
    mean: float
    std: float
    min: float
    p25: float
    p50: float
    p75: float
    max: float

    def as_dict(self) -> dict:
        return {
            "count": self.count,
            "mean": self.mean,
            "std": self.std,
            "min": self.min,
            "p25": self.p25,
            "p50": self.p50,
            "p75": self.p75,
            "max": self.max,
        }


def summarize(values) -> SummaryRow:
    arr = np.asarray(list(values), dtype=float)
    if arr.size == 0:
        raise ValueError("cannot summarize empty data")
    return SummaryRow(
        count=int(arr.size),
        mean=float(arr.mean()),
        std=float(arr.std()),
        min=float(arr.min()),
        p25=nearest_rank(arr, 25),
        p50=nearest_rank(arr, 50),
        p75=nearest_rank(arr, 75),
        max=float(arr.max()),
    )
