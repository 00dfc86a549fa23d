"""Readers and writers for the pipeline's tabular interchange files."""

from __future__ import annotations

import csv
from datetime import date

import numpy as np

from .eventstudy import EventSpec, ReturnPanel
from .labels import LabelSet


class MissingInputError(FileNotFoundError):
    """An upstream artifact is absent; the message names its producer."""


def read_returns(path) -> dict[str, dict[date, float]]:
    """Daily firm returns `{firm_id, date, return}`."""
    out: dict[str, dict[date, float]] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["firm_id", "date", "return"]:
            raise ValueError(f"{path}: unexpected header {header}")
        for row in reader:
            if not row:
                continue
            firm, day, value = row
            out.setdefault(firm, {})[date.fromisoformat(day)] = float(value)
    return out


def read_series(path, value_column: str) -> dict[date, float]:
    """Dated scalar series `{date, <value_column>}`."""
    out: dict[date, float] = {}
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["date", value_column]:
            raise ValueError(f"{path}: unexpected header {header}")
        for row in reader:
            if not row:
                continue
            out[date.fromisoformat(row[0])] = float(row[1])
    return out


def read_events(path) -> list[EventSpec]:
    """Event file `{firm_id, date, topics}` with an integer topic bitmask."""
    events: list[EventSpec] = []
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["firm_id", "date", "topics"]:
            raise ValueError(f"{path}: unexpected header {header}")
        for row in reader:
            if not row:
                continue
            firm, day, mask = row
            events.append(EventSpec(
                firm_id=firm,
                event_date=date.fromisoformat(day),
                labels=LabelSet(int(mask)),
            ))
    return events


def write_returns(path, firm_returns: dict[str, dict[date, float]]) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["firm_id", "date", "return"])
        for firm in sorted(firm_returns):
            for day in sorted(firm_returns[firm]):
                writer.writerow([firm, day.isoformat(),
                                 repr(firm_returns[firm][day])])


def write_series(path, series: dict[date, float], value_column: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["date", value_column])
        for day in sorted(series):
            writer.writerow([day.isoformat(), repr(series[day])])


def write_events(path, events) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["firm_id", "date", "topics"])
        for ev in sorted(events, key=lambda e: (e.firm_id, e.event_date)):
            writer.writerow([ev.firm_id, ev.event_date.isoformat(),
                             ev.labels.mask])


def load_return_panel(returns_path, market_path, riskfree_path) -> ReturnPanel:
    return ReturnPanel(
        firm_returns=read_returns(returns_path),
        market=read_series(market_path, "return"),
        risk_free=read_series(riskfree_path, "rate"),
    )


def split_announcements(ann_ids: list[str], test_fraction: float,
                        seed: int) -> tuple[list[str], list[str]]:
    """Deterministic train/test split at announcement level."""
    if not 0 < test_fraction < 1:
        raise ValueError("test_fraction must lie in (0, 1)")
    ordered = sorted(ann_ids)
    rng = np.random.default_rng(seed)
    perm = rng.permutation(len(ordered))
    n_test = max(1, int(round(test_fraction * len(ordered))))
    test = sorted(ordered[int(i)] for i in perm[:n_test])
    train = sorted(ordered[int(i)] for i in perm[n_test:])
    return train, test
