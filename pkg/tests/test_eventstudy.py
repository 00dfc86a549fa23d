import math
import warnings
from datetime import date, timedelta

import numpy as np
import pytest
from scipy import stats as sps

from adhoc_topics.eventstudy import (
    EXCLUDE_SHORT_HISTORY,
    EventSpec,
    MarketModelFit,
    ReturnPanel,
    fit_market_model,
    fits_from_csv,
    fits_to_csv,
    significance_split,
    topic_distribution,
)
from adhoc_topics.labels import EMPTY_LABELS, LabelSet
from adhoc_topics.synth import trading_calendar


def build_panel(n_days=400, beta=1.5, noise=0.0, seed=0, firms=("F1",)):
    cal = trading_calendar(date(2019, 1, 1), n_days)
    rng = np.random.default_rng(seed)
    market = {d: float(v) for d, v in zip(cal, rng.normal(3e-4, 0.01, n_days))}
    rf = {d: 1e-4 for d in cal}
    firm_returns = {}
    for f in firms:
        eps = rng.normal(0, noise, n_days) if noise else np.zeros(n_days)
        firm_returns[f] = {
            d: rf[d] + beta * (market[d] - rf[d]) + float(e)
            for d, e in zip(cal, eps)
        }
    return cal, ReturnPanel(firm_returns, market, rf)


class TestFit:
    def test_zero_noise_exact_recovery(self):
        cal, panel = build_panel()
        ev = cal[300]
        panel.firm_returns["F1"][ev] += 0.02
        fits, excluded = fit_market_model(panel, [EventSpec("F1", ev)])
        assert not excluded
        f = fits[0]
        assert abs(f.alpha1 - 1.5) < 1e-10
        assert abs(f.alpha2 - 0.02) < 1e-10
        assert abs(f.alpha0) < 1e-10

    def test_72_days_excluded_73_included(self):
        cal, panel = build_panel()
        ev = cal[300]
        full = panel.firm_returns["F1"]
        for n_days, expect_fit in ((72, False), (73, True)):
            short = {d: full[d] for d in cal[300 - n_days:301]}
            p = ReturnPanel({"FX": short}, panel.market, panel.risk_free)
            fits, excluded = fit_market_model(p, [EventSpec("FX", ev)])
            assert bool(fits) is expect_fit
            if not expect_fit:
                assert excluded[0].reason == EXCLUDE_SHORT_HISTORY

    def test_matches_normal_equations_oracle(self):
        cal, panel = build_panel(n_days=130, noise=0.01, seed=7)
        ev = cal[120]
        panel.firm_returns["F1"][ev] += 0.03
        fits, _ = fit_market_model(panel, [EventSpec("F1", ev)])
        f = fits[0]

        # independent normal-equations solve over the same 250-capped window
        rows = cal[max(0, 120 - 250):121]
        y = np.array([panel.firm_returns["F1"][d] - panel.risk_free[d] for d in rows])
        x = np.column_stack([
            np.ones(len(rows)),
            [panel.market[d] - panel.risk_free[d] for d in rows],
            [1.0 if d == ev else 0.0 for d in rows],
        ])
        beta_hat = np.linalg.solve(x.T @ x, x.T @ y)
        resid = y - x @ beta_hat
        dof = len(rows) - 3
        s2 = resid @ resid / dof
        cov = s2 * np.linalg.inv(x.T @ x)
        se = math.sqrt(cov[2, 2])
        t = beta_hat[2] / se
        p = 2 * sps.t.sf(abs(t), dof)

        assert f.alpha2 == pytest.approx(beta_hat[2], abs=1e-12)
        assert f.std_error == pytest.approx(se, abs=1e-12)
        assert f.t_stat == pytest.approx(t, abs=1e-10)
        assert f.p_value == pytest.approx(p, abs=1e-12)
        assert f.n_obs == len(rows)

    def test_weekend_event_shifts_forward(self):
        cal, panel = build_panel()
        saturday = cal[300] + timedelta(days=(5 - cal[300].weekday()) % 7)
        if saturday.weekday() != 5:
            saturday += timedelta(days=1)
        next_trading = next(d for d in cal if d > saturday)
        panel.firm_returns["F1"][next_trading] += 0.05
        fits, _ = fit_market_model(panel, [EventSpec("F1", saturday)])
        assert fits[0].alpha2 == pytest.approx(0.05, abs=1e-10)
        assert fits[0].event_date == saturday   # original date reported

    def test_duplicate_event_dates_merge_with_warning(self):
        cal, panel = build_panel()
        ev = cal[300]
        panel.firm_returns["F1"][ev] += 0.02
        events = [
            EventSpec("F1", ev, LabelSet.from_ids([0])),
            EventSpec("F1", ev, LabelSet.from_ids([1])),
        ]
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always")
            fits, _ = fit_market_model(panel, events)
        assert len(fits) == 1
        assert fits[0].labels.ids() == (0, 1)
        assert any("merging" in str(w.message) for w in caught)

    def test_joint_estimation_of_overlapping_events(self):
        cal, panel = build_panel()
        e1, e2 = cal[300], cal[320]
        panel.firm_returns["F1"][e1] += 0.02
        panel.firm_returns["F1"][e2] -= 0.03
        fits, _ = fit_market_model(panel, [EventSpec("F1", e1), EventSpec("F1", e2)])
        assert len(fits) == 2
        by_date = {f.event_date: f for f in fits}
        assert by_date[e1].alpha2 == pytest.approx(0.02, abs=1e-10)
        assert by_date[e2].alpha2 == pytest.approx(-0.03, abs=1e-10)
        assert by_date[e1].n_obs == by_date[e2].n_obs   # one joint regression

    def test_disjoint_windows_fit_separately_and_identically(self):
        cal, panel = build_panel(n_days=900)
        e1, e2 = cal[300], cal[860]
        panel.firm_returns["F1"][e1] += 0.02
        panel.firm_returns["F1"][e2] += 0.04
        solo, _ = fit_market_model(panel, [EventSpec("F1", e1)])
        both, _ = fit_market_model(panel, [EventSpec("F1", e1), EventSpec("F1", e2)])
        first = next(f for f in both if f.event_date == e1)
        assert first.alpha2 == pytest.approx(solo[0].alpha2, abs=1e-12)
        assert first.n_obs == solo[0].n_obs


def make_fit(alpha2, p_value, topics, firm="F", day=date(2020, 1, 6)):
    return MarketModelFit(
        firm_id=firm, event_date=day, alpha0=0.0, alpha1=1.0, alpha2=alpha2,
        std_error=0.01, t_stat=alpha2 / 0.01, p_value=p_value, n_obs=250,
        window=250, labels=LabelSet.from_ids(topics),
    )


class TestSignificanceSplit:
    def test_all_zero_t_stats_give_zero_frequencies(self):
        fits = [make_fit(0.0, 1.0, [0]) for _ in range(5)]
        split = significance_split(fits)
        assert split.positive[0] == 0.0 and split.negative[0] == 0.0

    def test_planted_positive_effects_only(self):
        fits = [make_fit(0.05, 0.001, [3]) for _ in range(4)]
        split = significance_split(fits)
        assert split.positive[3] == 1.0 and split.negative[3] == 0.0

    def test_matches_brute_force_recount(self):
        rng = np.random.default_rng(5)
        fits = []
        for _ in range(60):
            alpha = float(rng.normal(0, 0.02))
            p = float(rng.random())
            topics = rng.choice(20, size=rng.integers(1, 4), replace=False)
            fits.append(make_fit(alpha, p, topics.tolist()))
        split = significance_split(fits, level=0.10)
        for t in split.n_events:
            with_topic = [f for f in fits if t in f.labels]
            pos = sum(1 for f in with_topic if f.p_value < 0.10 and f.alpha2 > 0)
            neg = sum(1 for f in with_topic if f.p_value < 0.10 and f.alpha2 < 0)
            assert split.positive[t] == pytest.approx(pos / len(with_topic))
            assert split.negative[t] == pytest.approx(neg / len(with_topic))
            assert split.positive[t] + split.negative[t] <= 1.0

    def test_boundary_levels(self):
        fits = [make_fit(0.02, 0.5, [0]), make_fit(-0.01, 0.99, [0])]
        everything = significance_split(fits, level=1.0)
        assert everything.positive[0] + everything.negative[0] == 1.0
        nothing = significance_split(fits, level=0.0)
        assert nothing.positive[0] == 0.0 and nothing.negative[0] == 0.0

    def test_empty_fits_rejected(self):
        with pytest.raises(ValueError):
            significance_split([])


class TestTopicDistribution:
    def test_single_event_all_percentiles_equal(self):
        dist = topic_distribution([make_fit(0.03, 0.5, [2])])
        assert set(dist[2].values()) == {0.03}

    def test_symmetric_pair_takes_lower_central_rank(self):
        # nearest-rank convention: the median of {-x, +x} is -x
        dist = topic_distribution([make_fit(-0.04, 0.5, [1]),
                                   make_fit(0.04, 0.5, [1])])
        assert dist[1]["p50"] == -0.04

    def test_matches_sort_oracle(self):
        rng = np.random.default_rng(9)
        fits = [make_fit(float(rng.normal()), 0.5, [4]) for _ in range(50)]
        dist = topic_distribution(fits)
        values = sorted(f.alpha2 for f in fits)
        for p, key in ((5, "p5"), (25, "p25"), (50, "p50"), (75, "p75"), (95, "p95")):
            rank = max(1, math.ceil(p / 100 * len(values)))
            assert dist[4][key] == values[rank - 1]

    def test_multi_topic_event_contributes_to_each_group(self):
        fits = [make_fit(0.01, 0.5, [0, 1, 2])]
        dist = topic_distribution(fits)
        assert set(dist) == {0, 1, 2}


def test_fits_csv_roundtrip():
    fits = [make_fit(0.02, 0.04, [0, 5]), make_fit(-0.01, 0.6, [])]
    payload = fits_to_csv(fits)
    back = fits_from_csv(payload)
    assert [(f.firm_id, f.event_date, f.alpha2, f.p_value, f.labels)
            for f in back] == [
        (f.firm_id, f.event_date, f.alpha2, f.p_value, f.labels)
        for f in sorted(fits, key=lambda f: (f.firm_id, f.event_date))
    ]
