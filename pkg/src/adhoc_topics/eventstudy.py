"""Market-model abnormal returns with one-day event dummies.

For each firm the daily excess return is regressed on the market excess return
plus one dummy per announcement date; the dummy coefficient is that event's
abnormal return. The estimation window is the 250 trading days before the
event (minimum 73 observations), and events of one firm whose windows overlap
are estimated jointly in a single regression. Per-firm fits are independent
and can run in parallel.
"""

from __future__ import annotations

import csv
import io
import warnings
from bisect import bisect_left
from dataclasses import dataclass
from datetime import date

import numpy as np
from scipy import stats

from .descriptive import nearest_rank
from .labels import EMPTY_LABELS, NUM_TOPICS, LabelSet

ESTIMATION_WINDOW = 250
MIN_OBSERVATIONS = 73

EXCLUDE_NO_TRADING_DAY = "event date beyond trading calendar"
EXCLUDE_SHORT_HISTORY = "fewer than minimum required observations"
EXCLUDE_MISSING_EVENT_RETURN = "no firm return on event date"


@dataclass(frozen=True)
class ReturnPanel:
    """Daily return series per firm plus shared market and risk-free series."""

    firm_returns: dict[str, dict[date, float]]
    market: dict[date, float]
    risk_free: dict[date, float]

    def calendar(self) -> list[date]:
        return sorted(self.market)


@dataclass(frozen=True)
class EventSpec:
    firm_id: str
    event_date: date
    labels: LabelSet = EMPTY_LABELS


@dataclass(frozen=True)
class MarketModelFit:
    firm_id: str
    event_date: date
    alpha0: float
    alpha1: float
    alpha2: float
    std_error: float
    t_stat: float
    p_value: float
    n_obs: int
    window: int
    labels: LabelSet = EMPTY_LABELS


@dataclass(frozen=True)
class ExcludedEvent:
    firm_id: str
    event_date: date
    reason: str


def _shift_to_trading_day(day: date, calendar: list[date]) -> date | None:
    """Non-trading event dates move forward to the next trading day."""
    pos = bisect_left(calendar, day)
    if pos >= len(calendar):
        return None
    return calendar[pos]


def _window_positions(event_pos: int, window: int) -> range:
    return range(max(0, event_pos - window), event_pos)


def fit_market_model(panel: ReturnPanel, events: list[EventSpec],
                     window: int = ESTIMATION_WINDOW,
                     min_obs: int = MIN_OBSERVATIONS,
                     joint: bool = True) -> tuple[list[MarketModelFit], list[ExcludedEvent]]:
    """Fit per-event abnormal returns for all firms in `events`.

    Events of one firm are grouped whenever their estimation windows overlap
    and estimated in one regression with separate dummies (`joint=False`
    forces one regression per event). Events with fewer than `min_obs` usable
    excess-return observations in their window are excluded with a reason
    code; duplicate event dates collapse into one dummy with a warning.
    """
    calendar = panel.calendar()
    cal_pos = {d: i for i, d in enumerate(calendar)}
    fits: list[MarketModelFit] = []
    excluded: list[ExcludedEvent] = []

    by_firm: dict[str, list[EventSpec]] = {}
    for ev in events:
        by_firm.setdefault(ev.firm_id, []).append(ev)

    for firm_id in sorted(by_firm):
        returns = panel.firm_returns.get(firm_id, {})
        usable: list[tuple[EventSpec, int]] = []   # event, calendar position
        merged: dict[int, list[EventSpec]] = {}
        for ev in sorted(by_firm[firm_id], key=lambda e: e.event_date):
            day = _shift_to_trading_day(ev.event_date, calendar)
            if day is None:
                excluded.append(ExcludedEvent(firm_id, ev.event_date,
                                              EXCLUDE_NO_TRADING_DAY))
                continue
            pos = cal_pos[day]
            if pos in merged:
                warnings.warn(
                    f"{firm_id}: duplicate event date {day}; merging dummies",
                    stacklevel=2,
                )
                merged[pos].append(ev)
                continue
            obs = _usable_positions(panel, returns, calendar, pos, window)
            if len(obs) < min_obs:
                excluded.append(ExcludedEvent(firm_id, ev.event_date,
                                              EXCLUDE_SHORT_HISTORY))
                continue
            if calendar[pos] not in returns:
                excluded.append(ExcludedEvent(firm_id, ev.event_date,
                                              EXCLUDE_MISSING_EVENT_RETURN))
                continue
            merged[pos] = [ev]
            usable.append((ev, pos))

        if not usable:
            continue
        groups = _cluster_events(usable, window) if joint else [[u] for u in usable]
        for group in groups:
            fits.extend(
                _fit_group(panel, returns, calendar, firm_id, group, merged, window)
            )
    return fits, excluded


def _usable_positions(panel, returns, calendar, event_pos, window) -> list[int]:
    out = []
    for p in _window_positions(event_pos, window):
        d = calendar[p]
        if d in returns and d in panel.market and d in panel.risk_free:
            out.append(p)
    return out


def _cluster_events(usable, window) -> list[list[tuple[EventSpec, int]]]:
    """Group events whose estimation windows reach another event of the firm."""
    groups: list[list[tuple[EventSpec, int]]] = []
    for item in usable:                       # already date-sorted
        if groups and item[1] - groups[-1][-1][1] <= window:
            groups[-1].append(item)
        else:
            groups.append([item])
    return groups


def _fit_group(panel, returns, calendar, firm_id, group, merged, window):
    positions = sorted({p for _, p in group})
    sample = sorted(
        set().union(*[_usable_positions(panel, returns, calendar, p, window)
                      for p in positions])
        | set(positions)
    )
    y = []
    x_mkt = []
    dummies = np.zeros((len(sample), len(positions)))
    for row, p in enumerate(sample):
        d = calendar[p]
        rf = panel.risk_free[d]
        y.append(returns[d] - rf)
        x_mkt.append(panel.market[d] - rf)
        if p in positions:
            dummies[row, positions.index(p)] = 1.0
    design = np.column_stack([np.ones(len(sample)), np.asarray(x_mkt), dummies])
    yv = np.asarray(y)

    coef, _, _, _ = np.linalg.lstsq(design, yv, rcond=None)
    resid = yv - design @ coef
    dof = len(sample) - design.shape[1]
    if dof <= 0:
        return []
    s2 = float(resid @ resid) / dof
    xtx_inv = np.linalg.inv(design.T @ design)
    ses = np.sqrt(np.maximum(s2 * np.diag(xtx_inv), 0.0))

    out = []
    for j, p in enumerate(positions):
        alpha2 = float(coef[2 + j])
        se = float(ses[2 + j])
        t = alpha2 / se if se > 0 else 0.0
        pval = float(2 * stats.t.sf(abs(t), dof)) if se > 0 else 1.0
        merged_labels = EMPTY_LABELS
        for ev in merged[p]:
            merged_labels = merged_labels | ev.labels
        out.append(MarketModelFit(
            firm_id=firm_id,
            event_date=merged[p][0].event_date,
            alpha0=float(coef[0]),
            alpha1=float(coef[1]),
            alpha2=alpha2,
            std_error=se,
            t_stat=t,
            p_value=pval,
            n_obs=len(sample),
            window=window,
            labels=merged_labels,
        ))
    return out


@dataclass(frozen=True)
class SignificanceSplit:
    positive: dict[int, float]
    negative: dict[int, float]
    n_events: dict[int, int]


def significance_split(fits: list[MarketModelFit],
                       level: float = 0.10) -> SignificanceSplit:
    """Per-topic relative frequency of significantly positive and negative
    abnormal returns; insignificant events are dropped (frequencies per topic
    therefore sum to at most 1)."""
    if not fits:
        raise ValueError("no fits to split")
    pos = {t: 0 for t in range(NUM_TOPICS)}
    neg = {t: 0 for t in range(NUM_TOPICS)}
    n = {t: 0 for t in range(NUM_TOPICS)}
    for fit in fits:
        for t in fit.labels:
            n[t] += 1
            if fit.p_value < level:
                if fit.alpha2 > 0:
                    pos[t] += 1
                elif fit.alpha2 < 0:
                    neg[t] += 1
    return SignificanceSplit(
        positive={t: pos[t] / n[t] for t in range(NUM_TOPICS) if n[t]},
        negative={t: neg[t] / n[t] for t in range(NUM_TOPICS) if n[t]},
        n_events={t: c for t, c in n.items() if c},
    )


def topic_distribution(fits: list[MarketModelFit]) -> dict[int, dict[str, float]]:
    """Nearest-rank percentile summary of abnormal returns per topic; an event
    with k topics contributes to all k groups."""
    grouped: dict[int, list[float]] = {}
    for fit in fits:
        for t in fit.labels:
            grouped.setdefault(t, []).append(fit.alpha2)
    out: dict[int, dict[str, float]] = {}
    for t, values in sorted(grouped.items()):
        out[t] = {
            "p5": nearest_rank(values, 5),
            "p25": nearest_rank(values, 25),
            "p50": nearest_rank(values, 50),
            "p75": nearest_rank(values, 75),
            "p95": nearest_rank(values, 95),
        }
    return out


def fits_to_csv(fits: list[MarketModelFit]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["firm_id", "date", "alpha2", "se", "t", "p", "n_obs",
                     "topics"])
    for f in sorted(fits, key=lambda f: (f.firm_id, f.event_date.isoformat())):
        writer.writerow([
            f.firm_id, f.event_date.isoformat(), repr(f.alpha2),
            repr(f.std_error), repr(f.t_stat), repr(f.p_value), f.n_obs,
            f.labels.mask,
        ])
    return buf.getvalue()


def fits_from_csv(payload: str) -> list[MarketModelFit]:
    reader = csv.reader(io.StringIO(payload))
    header = next(reader, None)
    expected = ["firm_id", "date", "alpha2", "se", "t", "p", "n_obs", "topics"]
    if header != expected:
        raise ValueError(f"unexpected fits header: {header}")
    fits = []
    for row in reader:
        if not row:
            continue
        firm, day, alpha2, se, t, p, n_obs, mask = row
        fits.append(MarketModelFit(
            firm_id=firm,
            event_date=date.fromisoformat(day),
            alpha0=0.0, alpha1=0.0,
            alpha2=float(alpha2), std_error=float(se), t_stat=float(t),
            p_value=float(p), n_obs=int(n_obs), window=ESTIMATION_WINDOW,
            labels=LabelSet(int(mask)),
        ))
    return fits
