"""Two-way fixed-effects regression of abnormal returns on topic dummies.

Every event contributes one observation: its abnormal return, the firm, the
calendar year, 20 topic dummies, and one interaction dummy per retained topic
pair (pairs need a minimum co-occurrence support, default 20, to enter). Firm
and year effects are absorbed by alternating demeaning until convergence;
standard errors are clustered on firm and year via the inclusion-exclusion
combination V_firm + V_year - V_(firm,year), each piece carrying a
G/(G-1) * (N-1)/(N-K) small-sample factor. With a single cluster in one
dimension the estimator falls back to one-way clustering with a warning.
"""

from __future__ import annotations

import csv
import io
import warnings
from dataclasses import dataclass
from itertools import combinations

import numpy as np
from scipy import stats

from .labels import NUM_TOPICS, LabelSet

# Stricter than the 1e-10 contract so the within-transformation is idempotent
# to 1e-12 on converged data.
DEMEAN_TOL = 1e-13
DEMEAN_MAX_SWEEPS = 1000
MIN_PAIR_SUPPORT = 20


class PanelDesignError(ValueError):
    """Design has no estimable coefficients."""


@dataclass(frozen=True)
class PanelEvent:
    firm_id: str
    year: int
    abnormal_return: float
    labels: LabelSet


@dataclass(frozen=True)
class PanelDesign:
    y: np.ndarray
    x: np.ndarray
    firm_ids: tuple[str, ...]
    years: tuple[int, ...]
    columns: tuple[str, ...]
    retained_pairs: tuple[tuple[int, int], ...]


def build_design(events: list[PanelEvent], topic_names: list[str],
                 min_pair_support: int = MIN_PAIR_SUPPORT,
                 interactions: bool = True) -> PanelDesign:
    """Topic-dummy design matrix with optional pairwise interaction dummies.

    All 190 unordered pairs are considered; a pair is retained when at least
    `min_pair_support` events carry both topics. Interaction columns are the
    element-wise AND of their parent dummies.
    """
    if not events:
        raise PanelDesignError("no events")
    pair_counts: dict[tuple[int, int], int] = {
        p: 0 for p in combinations(range(NUM_TOPICS), 2)
    }
    for ev in events:
        for pair in combinations(sorted(ev.labels.ids()), 2):
            pair_counts[pair] += 1
    retained = tuple(
        p for p in sorted(pair_counts) if pair_counts[p] >= min_pair_support
    ) if interactions else ()

    n = len(events)
    x = np.zeros((n, NUM_TOPICS + len(retained)))
    y = np.zeros(n)
    for i, ev in enumerate(events):
        y[i] = ev.abnormal_return
        for t in ev.labels:
            x[i, t] = 1.0
        for j, (a, b) in enumerate(retained):
            if a in ev.labels and b in ev.labels:
                x[i, NUM_TOPICS + j] = 1.0
    columns = tuple(topic_names) + tuple(
        f"{topic_names[a]} x {topic_names[b]}" for a, b in retained
    )
    return PanelDesign(
        y=y, x=x,
        firm_ids=tuple(ev.firm_id for ev in events),
        years=tuple(ev.year for ev in events),
        columns=columns,
        retained_pairs=retained,
    )


def demean_two_way(values: np.ndarray, groups_a: np.ndarray,
                   groups_b: np.ndarray, tol: float = DEMEAN_TOL) -> np.ndarray:
    """Alternate group demeaning until the largest change falls below `tol`."""
    out = np.asarray(values, dtype=float).copy()
    if out.ndim == 1:
        out = out[:, None]
        squeeze = True
    else:
        squeeze = False
    for _ in range(DEMEAN_MAX_SWEEPS):
        before = out.copy()
        for groups in (groups_a, groups_b):
            for g in np.unique(groups):
                rows = groups == g
                out[rows] -= out[rows].mean(axis=0)
        if np.abs(out - before).max() < tol:
            break
    else:
        raise RuntimeError("demeaning did not converge")
    return out[:, 0] if squeeze else out


@dataclass(frozen=True)
class PanelResult:
    coefficients: dict[str, float]
    std_errors: dict[str, float]
    t_stats: dict[str, float]
    p_values: dict[str, float]
    within_r2: float
    n_obs: int
    n_regressors: int
    retained_pairs: tuple[tuple[int, int], ...]
    dropped_columns: tuple[str, ...]
    cluster_spec: tuple[str, ...]


def _cluster_meat(x: np.ndarray, resid: np.ndarray, codes: np.ndarray) -> tuple[np.ndarray, int]:
    k = x.shape[1]
    meat = np.zeros((k, k))
    for g in np.unique(codes):
        rows = codes == g
        s = x[rows].T @ resid[rows]
        meat += np.outer(s, s)
    return meat, len(np.unique(codes))


def _small_sample(g: int, n: int, k: int) -> float:
    if g <= 1:
        return 1.0
    return (g / (g - 1)) * ((n - 1) / (n - k))


def fit_fe(design: PanelDesign,
           cluster_spec: tuple[str, ...] = ("firm", "year")) -> PanelResult:
    """Two-way fixed-effects OLS with clustered standard errors.

    Firm and year effects are removed by iterative demeaning of y and every
    regressor; collinear columns (after the within-transformation) are dropped
    and reported. The within-R^2 is computed on the demeaned data. Inference
    uses a t distribution with min(G)-1 degrees of freedom over the clustering
    dimensions.
    """
    firms = np.asarray(design.firm_ids)
    years = np.asarray(design.years)
    if len(np.unique(firms)) < 2 and len(np.unique(years)) < 2:
        raise PanelDesignError("need at least 2 firms or 2 years")
    if not np.any(design.x[:, :NUM_TOPICS]):
        raise PanelDesignError("all topic dummies are zero; nothing to estimate")
    for dim in cluster_spec:
        if dim not in ("firm", "year"):
            raise ValueError(f"unknown cluster dimension {dim!r}")

    y_t = demean_two_way(design.y, firms, years)
    x_t = demean_two_way(design.x, firms, years)

    # Rank screen via pivoted QR on the transformed design.
    from scipy.linalg import qr

    _, r, piv = qr(x_t, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r))
    tol = diag.max() * max(x_t.shape) * np.finfo(float).eps if diag.size else 0.0
    rank = int((diag > tol).sum())
    keep = sorted(piv[:rank])
    dropped = tuple(design.columns[i] for i in sorted(piv[rank:]))
    x_keep = x_t[:, keep]
    names = [design.columns[i] for i in keep]
    if not any(i < NUM_TOPICS for i in keep):
        raise PanelDesignError("all topic dummies were dropped as collinear")

    coef, _, _, _ = np.linalg.lstsq(x_keep, y_t, rcond=None)
    resid = y_t - x_keep @ coef
    n, k = x_keep.shape
    ssr = float(resid @ resid)
    sst = float(y_t @ y_t)
    within_r2 = 1.0 - ssr / sst if sst > 0 else 0.0

    # Absorbed firm and year effects consume degrees of freedom too; the
    # small-sample factor must count them or clustered SEs come out short.
    k_absorbed = len(np.unique(firms)) + len(np.unique(years)) - 1
    k_total = min(k + k_absorbed, n - 1)

    bread = np.linalg.inv(x_keep.T @ x_keep)
    cluster_dims = []
    if "firm" in cluster_spec:
        cluster_dims.append(("firm", firms))
    if "year" in cluster_spec:
        cluster_dims.append(("year", years))
    effective = [(name, codes) for name, codes in cluster_dims
                 if len(np.unique(codes)) > 1]
    for name, codes in cluster_dims:
        if len(np.unique(codes)) <= 1:
            warnings.warn(
                f"single {name} cluster; falling back to one-way clustering",
                stacklevel=2,
            )
    if not effective:
        raise PanelDesignError("no usable clustering dimension")

    g_counts = []
    if len(effective) == 1:
        codes = effective[0][1]
        meat, g = _cluster_meat(x_keep, resid, _codes(codes))
        vcov = _small_sample(g, n, k_total) * bread @ meat @ bread
        g_counts.append(g)
    else:
        meat_a, g_a = _cluster_meat(x_keep, resid, _codes(effective[0][1]))
        meat_b, g_b = _cluster_meat(x_keep, resid, _codes(effective[1][1]))
        inter = np.array([f"{a}|{b}" for a, b in zip(effective[0][1],
                                                     effective[1][1])])
        meat_ab, g_ab = _cluster_meat(x_keep, resid, _codes(inter))
        vcov = (
            _small_sample(g_a, n, k_total) * bread @ meat_a @ bread
            + _small_sample(g_b, n, k_total) * bread @ meat_b @ bread
            - _small_sample(g_ab, n, k_total) * bread @ meat_ab @ bread
        )
        g_counts.extend([g_a, g_b])

    dof = max(min(g_counts) - 1, 1)
    variances = np.diag(vcov)
    coefficients: dict[str, float] = {}
    std_errors: dict[str, float] = {}
    t_stats: dict[str, float] = {}
    p_values: dict[str, float] = {}
    for name, b, v in zip(names, coef, variances):
        coefficients[name] = float(b)
        if v > 0:
            se = float(np.sqrt(v))
            t = float(b) / se
            p = float(2 * stats.t.sf(abs(t), dof))
        else:
            se, t, p = float("nan"), float("nan"), float("nan")
        std_errors[name] = se
        t_stats[name] = t
        p_values[name] = p

    return PanelResult(
        coefficients=coefficients,
        std_errors=std_errors,
        t_stats=t_stats,
        p_values=p_values,
        within_r2=within_r2,
        n_obs=n,
        n_regressors=k,
        retained_pairs=design.retained_pairs,
        dropped_columns=dropped,
        cluster_spec=tuple(name for name, _ in effective),
    )


def _codes(values: np.ndarray) -> np.ndarray:
    _, codes = np.unique(values, return_inverse=True)
    return codes


def panel_report_csv(no_interaction: PanelResult, with_interaction: PanelResult,
                     topic_names: list[str]) -> str:
    """Topic rows (sorted by the no-interaction coefficient, descending) with
    both setups side by side, plus a footer of fit statistics."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["row", "coef_no_interaction", "p_no_interaction",
                     "coef_with_interaction", "p_with_interaction"])
    order = sorted(
        topic_names,
        key=lambda name: -no_interaction.coefficients.get(name, float("-inf")),
    )
    for name in order:
        writer.writerow([
            name,
            _cell(no_interaction.coefficients.get(name)),
            _cell(no_interaction.p_values.get(name)),
            _cell(with_interaction.coefficients.get(name)),
            _cell(with_interaction.p_values.get(name)),
        ])
    writer.writerow(["within_r2", repr(no_interaction.within_r2), "",
                     repr(with_interaction.within_r2), ""])
    writer.writerow(["n_obs", no_interaction.n_obs, "",
                     with_interaction.n_obs, ""])
    writer.writerow(["n_regressors", no_interaction.n_regressors, "",
                     with_interaction.n_regressors, ""])
    return buf.getvalue()


def interaction_matrix_csv(result: PanelResult, topic_names: list[str],
                           level: float = 0.10) -> str:
    """Pairwise interaction coefficients; insignificant cells are blanked."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["topic_row", "topic_col", "coefficient", "p"])
    for a, b in result.retained_pairs:
        name = f"{topic_names[a]} x {topic_names[b]}"
        coef = result.coefficients.get(name)
        p = result.p_values.get(name)
        if coef is None or p is None or not np.isfinite(p) or p >= level:
            writer.writerow([topic_names[a], topic_names[b], "", ""])
        else:
            writer.writerow([topic_names[a], topic_names[b], repr(coef), repr(p)])
    return buf.getvalue()


def _cell(value) -> str:
    if value is None or (isinstance(value, float) and not np.isfinite(value)):
        return ""
    return repr(float(value))
