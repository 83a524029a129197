"""Validation protocol: regression onto subjective scores and statistics.

Objective scores are regressed onto subjective scores with a 5-parameter
logistic-plus-linear map fit by Nelder-Mead least squares, then compared
via Pearson and Spearman correlation, RMSE, and (when per-image standard
deviations exist) the two-sigma outlier ratio. Distributional agreement is
summarized by five histogram distances: earth mover's, KL, Jensen-Shannon,
one minus intersection, and L2.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.optimize import minimize
from scipy.special import expit

from msunique.imageio import SubjectiveEntry
from msunique.scoring import QualityRecord, spearman

__all__ = [
    "RegressionFit",
    "HistogramDistances",
    "EvaluationReport",
    "pcc",
    "srocc",
    "rmse",
    "fit_logistic",
    "outlier_ratio",
    "histogram_distances",
    "evaluate",
    "export_scatter",
    "format_report",
]

DEFAULT_BINS = 10
KL_FLOOR = 1e-10
_SIMPLEX_MAXITER = 5000
_SIMPLEX_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class RegressionFit:
    params: tuple[float, float, float, float, float]
    regressed: np.ndarray
    residual_sse: float


class HistogramDistances(NamedTuple):
    emd: float
    kl: float
    js: float
    hi: float
    l2: float


@dataclass(frozen=True, eq=False)
class EvaluationReport:
    n: int
    pcc: float
    srocc: float
    rmse: float
    outlier_ratio: float | None
    hist_distances: HistogramDistances
    regression: RegressionFit


def _pair(a, b):
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size != b.size:
        raise ValueError("input vectors must have equal length")
    if a.size < 2:
        raise ValueError("need at least two samples")
    return a, b


def pcc(a, b) -> float:
    """Pearson linear correlation coefficient."""
    a, b = _pair(a, b)
    da = a - a.mean()
    db = b - b.mean()
    sa = float(da @ da)
    sb = float(db @ db)
    if sa == 0.0 or sb == 0.0:
        raise ValueError("zero variance")
    return float(np.clip((da @ db) / np.sqrt(sa * sb), -1.0, 1.0))


def srocc(a, b) -> float:
    """Spearman rank correlation (average ranks for ties)."""
    a, b = _pair(a, b)
    return spearman(a, b)


def rmse(a, b) -> float:
    a, b = _pair(a, b)
    return float(np.sqrt(np.mean((a - b) ** 2)))


def _logistic5(params, x: np.ndarray) -> np.ndarray:
    b1, b2, b3, b4, b5 = params
    return b1 * (0.5 - expit(-b2 * (x - b3))) + b4 * x + b5


def fit_logistic(objective, subjective) -> RegressionFit:
    """Least-squares fit of a 5-parameter logistic-plus-linear map.

    Q(x) = b1 * (1/2 - 1/(1 + exp(b2 (x - b3)))) + b4 x + b5, minimized by
    Nelder-Mead from a standard initialization (b1 = subjective range,
    b2 = 1/std(objective), b3 = mean(objective), b4 = 0, b5 = mean of the
    subjective scores). A closed-form linear fit (b1 = 0) is always a
    candidate and a second simplex run starts from it, so the returned fit
    is never worse than the best pure-linear map.
    """
    x = np.asarray(objective, dtype=np.float64).ravel()
    y = np.asarray(subjective, dtype=np.float64).ravel()
    if x.size != y.size:
        raise ValueError("input vectors must have equal length")
    if x.size < 5:
        raise ValueError("too few points for the 5-parameter fit (need >= 5)")
    if np.all(x == x[0]):
        raise ValueError("constant objective scores")

    def sse(params) -> float:
        r = _logistic5(params, x) - y
        return float(r @ r)

    slope, intercept = np.linalg.lstsq(
        np.column_stack([x, np.ones_like(x)]), y, rcond=None
    )[0]
    sd = float(x.std())
    start = np.array(
        [float(y.max() - y.min()), 1.0 / sd, float(x.mean()), 0.0, float(y.mean())]
    )
    linear = np.array([0.0, 1.0 / sd, float(x.mean()), slope, intercept])

    candidates = [linear]
    for x0 in (start, linear):
        result = minimize(
            sse,
            x0,
            method="Nelder-Mead",
            options={
                "maxiter": _SIMPLEX_MAXITER,
                "fatol": _SIMPLEX_TOL,
                "xatol": _SIMPLEX_TOL,
            },
        )
        candidates.append(result.x)
    best = min(candidates, key=sse)
    params = tuple(float(v) for v in best)
    return RegressionFit(params, _logistic5(params, x), sse(best))


def outlier_ratio(regressed, entries: Sequence[SubjectiveEntry]) -> float:
    """Fraction of predictions more than two subjective stds from the mean score."""
    regressed = np.asarray(regressed, dtype=np.float64).ravel()
    if regressed.size != len(entries):
        raise ValueError("input vectors must have equal length")
    if regressed.size == 0:
        raise ValueError("need at least one sample")
    if any(e.std is None for e in entries):
        raise ValueError("outlier ratio unavailable: entries lack score stds")
    scores = np.array([e.score for e in entries])
    stds = np.array([e.std for e in entries])
    return float(np.mean(np.abs(regressed - scores) > 2.0 * stds))


def _kl_term(p: np.ndarray, q: np.ndarray) -> float:
    # 0 * log(0) = 0; q > 0 wherever p > 0 for the mixtures used here
    mask = p > 0
    return float(np.sum(p[mask] * np.log(p[mask] / q[mask])))


def histogram_distances(a, b, bins: int = DEFAULT_BINS) -> HistogramDistances:
    """Five distances between the normalized histograms of two samples.

    Both samples are binned into `bins` uniform bins spanning their union
    range and normalized to sum 1. Earth mover's distance is the summed
    absolute CDF gap divided by the bin count; KL floors empty bins at
    1e-10 and renormalizes; JS uses the raw histograms with 0 log 0 = 0;
    intersection distance is the summed positive excess of the first
    histogram (equals 1 - sum min for unit-mass histograms, and is exactly
    0 for identical inputs). A degenerate union range (every value in both
    samples identical) yields all-zero distances.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    b = np.asarray(b, dtype=np.float64).ravel()
    if a.size == 0 or b.size == 0:
        raise ValueError("histogram inputs must be nonempty")
    if bins < 1:
        raise ValueError("bins must be positive")
    lo = min(a.min(), b.min())
    hi = max(a.max(), b.max())
    if lo == hi:
        return HistogramDistances(0.0, 0.0, 0.0, 0.0, 0.0)

    ha = np.histogram(a, bins=bins, range=(lo, hi))[0] / a.size
    hb = np.histogram(b, bins=bins, range=(lo, hi))[0] / b.size

    emd = float(np.sum(np.abs(np.cumsum(ha - hb))) / bins)
    hi_dist = float(np.sum(np.maximum(ha - hb, 0.0)))
    l2 = float(np.sqrt(np.sum((ha - hb) ** 2)))

    fa = np.maximum(ha, KL_FLOOR)
    fa = fa / fa.sum()
    fb = np.maximum(hb, KL_FLOOR)
    fb = fb / fb.sum()
    kl = float(np.sum(fa * np.log(fa / fb)))

    m = 0.5 * (ha + hb)
    js = 0.5 * _kl_term(ha, m) + 0.5 * _kl_term(hb, m)
    return HistogramDistances(emd, kl, js, hi_dist, l2)


def evaluate(
    pairs: Sequence[QualityRecord],
    entries: Sequence[SubjectiveEntry],
    bins: int = DEFAULT_BINS,
) -> EvaluationReport:
    """Run the full validation protocol on scored pairs.

    Objective scores are regressed onto the subjective scores; correlation,
    error, and histogram statistics compare the regressed predictions
    against the subjective values. The outlier ratio is included only when
    every entry carries a score standard deviation.
    """
    if len(pairs) != len(entries):
        raise ValueError("scored pairs and subjective entries must align")
    objective = np.array([p.score for p in pairs], dtype=np.float64)
    subjective = np.array([e.score for e in entries], dtype=np.float64)
    fit = fit_logistic(objective, subjective)
    ratio = None
    if entries and all(e.std is not None for e in entries):
        ratio = outlier_ratio(fit.regressed, entries)
    return EvaluationReport(
        n=len(pairs),
        pcc=pcc(fit.regressed, subjective),
        srocc=srocc(fit.regressed, subjective),
        rmse=rmse(fit.regressed, subjective),
        outlier_ratio=ratio,
        hist_distances=histogram_distances(fit.regressed, subjective, bins),
        regression=fit,
    )


def _g17(v: float) -> str:
    return format(float(v), ".17g")


def export_scatter(objective, regressed, subjective, path) -> None:
    """Write an `objective,regressed,subjective` CSV for external plotting."""
    objective = np.asarray(objective, dtype=np.float64).ravel()
    regressed = np.asarray(regressed, dtype=np.float64).ravel()
    subjective = np.asarray(subjective, dtype=np.float64).ravel()
    if not objective.size == regressed.size == subjective.size:
        raise ValueError("input vectors must have equal length")
    lines = ["objective,regressed,subjective"]
    for o, r, s in zip(objective, regressed, subjective):
        lines.append(f"{_g17(o)},{_g17(r)},{_g17(s)}")
    with open(path, "w", encoding="ascii") as fh:
        fh.write("\n".join(lines) + "\n")


def _report_items(report: EvaluationReport) -> list[tuple[str, str]]:
    items = [
        ("n", str(report.n)),
        ("pcc", _g17(report.pcc)),
        ("srocc", _g17(report.srocc)),
        ("rmse", _g17(report.rmse)),
        (
            "outlier_ratio",
            "n/a" if report.outlier_ratio is None else _g17(report.outlier_ratio),
        ),
        ("emd", _g17(report.hist_distances.emd)),
        ("kl", _g17(report.hist_distances.kl)),
        ("js", _g17(report.hist_distances.js)),
        ("hi", _g17(report.hist_distances.hi)),
        ("l2", _g17(report.hist_distances.l2)),
        ("residual_sse", _g17(report.regression.residual_sse)),
    ]
    items += [
        (f"beta{i}", _g17(v)) for i, v in enumerate(report.regression.params, start=1)
    ]
    return items


def format_report(report: EvaluationReport, style: str = "text") -> str:
    """Render a report as `key=value` lines or as a two-line CSV."""
    items = _report_items(report)
    if style == "text":
        return "\n".join(f"{k}={v}" for k, v in items)
    if style == "csv":
        return ",".join(k for k, _ in items) + "\n" + ",".join(v for _, v in items)
    raise ValueError("style must be 'text' or 'csv'")
