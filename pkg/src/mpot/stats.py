"""Rank statistics linking code quality to answer accuracy.

System-level association uses Spearman's rank correlation over
(language, system, model) points; sample-level association uses the
Mann-Whitney AUC of the quality score as a correctness predictor plus a
Welch t statistic. Score distributions are tabulated as percentage rows.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np


class DegenerateDataError(ValueError):
    """Raised when an input has no variation to rank or test."""


@dataclass(frozen=True)
class PairedSeries:
    """Labeled (x, y) points, e.g. accuracy vs. mean quality per system."""

    labels: tuple[str, ...]
    x: tuple[float, ...]
    y: tuple[float, ...]

    def __post_init__(self):
        if not (len(self.labels) == len(self.x) == len(self.y)):
            raise ValueError("labels, x, and y must have equal lengths")
        if len(self.x) < 2:
            raise ValueError("need at least two points")

    @classmethod
    def from_points(cls, points: Iterable[tuple[str, float, float]]) -> "PairedSeries":
        labels, xs, ys = [], [], []
        for label, x, y in points:
            labels.append(str(label))
            xs.append(float(x))
            ys.append(float(y))
        return cls(tuple(labels), tuple(xs), tuple(ys))


def average_ranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks with ties sharing their average rank."""
    v = np.asarray(values, dtype=float)
    order = np.argsort(v, kind="mergesort")
    ranks = np.empty(len(v), dtype=float)
    sorted_v = v[order]
    i = 0
    while i < len(v):
        j = i
        while j + 1 < len(v) and sorted_v[j + 1] == sorted_v[i]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def spearman_rho(series: PairedSeries) -> float:
    """Tie-corrected Spearman: the Pearson correlation of average ranks."""
    rx = average_ranks(series.x)
    ry = average_ranks(series.y)
    rx -= rx.mean()
    ry -= ry.mean()
    denom = np.sqrt((rx @ rx) * (ry @ ry))
    if denom == 0:
        raise DegenerateDataError("correlation is undefined for a constant series")
    return float((rx @ ry) / denom)


def auc_mann_whitney(positives: Sequence[float], negatives: Sequence[float]) -> float:
    """P(positive > negative) + 0.5 * P(positive = negative), computed exactly.

    Uses the rank-sum identity, so ties contribute half credit without any
    sampling.
    """
    pos = np.asarray(positives, dtype=float)
    neg = np.asarray(negatives, dtype=float)
    if len(pos) == 0 or len(neg) == 0:
        raise DegenerateDataError("both score collections must be non-empty")
    ranks = average_ranks(np.concatenate([pos, neg]))
    rank_sum = float(ranks[: len(pos)].sum())
    u = rank_sum - len(pos) * (len(pos) + 1) / 2.0
    return u / (len(pos) * len(neg))


def welch_t_test(a: Sequence[float], b: Sequence[float]) -> float:
    """Welch statistic (mean_a - mean_b) / sqrt(s2_a/n_a + s2_b/n_b)."""
    x = np.asarray(a, dtype=float)
    y = np.asarray(b, dtype=float)
    if len(x) < 2 or len(y) < 2:
        raise DegenerateDataError("each side needs at least two observations")
    var_x = float(np.var(x, ddof=1))
    var_y = float(np.var(y, ddof=1))
    denom = var_x / len(x) + var_y / len(y)
    if denom == 0:
        raise DegenerateDataError("both sides have zero variance")
    return float((x.mean() - y.mean()) / np.sqrt(denom))


SCORE_BUCKETS = (0, 1, 2, 3, 4)


@dataclass(frozen=True)
class ScoreDistribution:
    """Percentage of each score value among correct and incorrect answers."""

    correct: tuple[float, ...]
    incorrect: tuple[float, ...]

    def __post_init__(self):
        for name, row in (("correct", self.correct), ("incorrect", self.incorrect)):
            if len(row) != len(SCORE_BUCKETS):
                raise ValueError(f"{name} row must have {len(SCORE_BUCKETS)} buckets")
            if abs(sum(row) - 100.0) > 0.5:
                raise ValueError(f"{name} row must sum to 100 within rounding, got {sum(row):.2f}")


def build_distribution_table(records: Iterable[tuple[bool, int]]) -> ScoreDistribution:
    """Tabulate (correct?, score) records into percentage rows."""
    counts = {True: [0] * len(SCORE_BUCKETS), False: [0] * len(SCORE_BUCKETS)}
    for correct, ice in records:
        if ice not in SCORE_BUCKETS:
            raise ValueError(f"score {ice!r} outside {SCORE_BUCKETS}")
        counts[bool(correct)][ice] += 1
    n_correct = sum(counts[True])
    n_incorrect = sum(counts[False])
    if n_correct == 0 or n_incorrect == 0:
        raise DegenerateDataError("need at least one correct and one incorrect record")
    return ScoreDistribution(
        correct=tuple(100.0 * c / n_correct for c in counts[True]),
        incorrect=tuple(100.0 * c / n_incorrect for c in counts[False]),
    )


@dataclass(frozen=True)
class CorrelationReport:
    spearman_rho: float
    auc: float
    t_statistic: float
    n_points: int

    def __post_init__(self):
        if not -1.0 <= self.spearman_rho <= 1.0:
            raise ValueError("spearman_rho outside [-1, 1]")
        if not 0.0 <= self.auc <= 1.0:
            raise ValueError("auc outside [0, 1]")


def build_correlation_report(
    series: PairedSeries,
    sample_records: Iterable[tuple[bool, int]],
) -> CorrelationReport:
    """Combine the system-level correlation with sample-level separability.

    sample_records are (answer correct?, quality score) pairs; the AUC here
    pools every sample (per-group AUCs are reported separately by callers
    that have a grouping).
    """
    records = list(sample_records)
    pos = [ice for correct, ice in records if correct]
    neg = [ice for correct, ice in records if not correct]
    return CorrelationReport(
        spearman_rho=spearman_rho(series),
        auc=auc_mann_whitney(pos, neg),
        t_statistic=welch_t_test(pos, neg),
        n_points=len(series.x),
    )
