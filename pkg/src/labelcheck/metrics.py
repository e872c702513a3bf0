"""Confusion counts and evaluation statistics for a filtering run.

"Positive" means removed-and-truly-mislabeled.  Metrics that are undefined
for a run (sensitivity with no mislabeled instances, percent reduction with
a zero planted rate) are carried as ``None`` and skipped when averaging.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    tn: int
    fp: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.tn + self.fp + self.fn

    @property
    def removed(self) -> int:
        return self.tp + self.fp

    @property
    def retained(self) -> int:
        return self.tn + self.fn

    @property
    def mislabeled(self) -> int:
        return self.tp + self.fn


@dataclass(frozen=True)
class RunMetrics:
    sensitivity: float | None
    specificity: float | None
    fdr: float
    for_rate: float
    pct_delta: float | None


def score_run(
    truth: Sequence[bool],
    verdicts: Sequence[bool],
    planted_rate: float | None = None,
) -> tuple[ConfusionCounts, RunMetrics]:
    """Score removal verdicts against ground-truth mislabeling flags.

    ``truth[i]`` marks instance i as truly mislabeled, ``verdicts[i]`` marks
    it as removed.  ``planted_rate`` is the rate the percent-reduction
    metric is measured against; leave it ``None`` (or 0) to mark the
    reduction undefined.
    """
    truth = np.asarray(truth, dtype=bool)
    verdicts = np.asarray(verdicts, dtype=bool)
    if truth.shape != verdicts.shape or truth.ndim != 1:
        raise ValueError(
            f"truth and verdicts must be equal-length vectors, got {truth.shape} vs {verdicts.shape}"
        )
    tp = int(np.sum(verdicts & truth))
    fp = int(np.sum(verdicts & ~truth))
    fn = int(np.sum(~verdicts & truth))
    tn = int(np.sum(~verdicts & ~truth))
    counts = ConfusionCounts(tp=tp, tn=tn, fp=fp, fn=fn)

    sensitivity = tp / (tp + fn) if (tp + fn) > 0 else None
    specificity = tn / (tn + fp) if (tn + fp) > 0 else None
    fdr = fp / max(tp + fp, 1)
    for_rate = fn / max(tn + fn, 1)
    if planted_rate is not None and planted_rate > 0:
        pct_delta = (1.0 - for_rate / planted_rate) * 100.0
    else:
        pct_delta = None
    return counts, RunMetrics(
        sensitivity=sensitivity,
        specificity=specificity,
        fdr=fdr,
        for_rate=for_rate,
        pct_delta=pct_delta,
    )


@dataclass(frozen=True)
class MetricSummary:
    """Mean over the runs where the metric was defined, with its Monte-Carlo SE."""

    mean: float | None
    se: float | None
    count: int


@dataclass(frozen=True)
class AggregateMetrics:
    sensitivity: MetricSummary
    specificity: MetricSummary
    fdr: MetricSummary
    for_rate: MetricSummary
    pct_delta: MetricSummary


def _summarize(values: list[float]) -> MetricSummary:
    n = len(values)
    if n == 0:
        return MetricSummary(mean=None, se=None, count=0)
    mean = float(np.mean(values))
    se = float(np.std(values, ddof=1) / math.sqrt(n)) if n > 1 else None
    return MetricSummary(mean=mean, se=se, count=n)


def aggregate(runs: Sequence[RunMetrics]) -> AggregateMetrics:
    """Average each metric over the runs in which it is defined."""
    if not runs:
        raise ValueError("no runs to aggregate")
    fields = ("sensitivity", "specificity", "fdr", "for_rate", "pct_delta")
    summaries = {
        name: _summarize([getattr(r, name) for r in runs if getattr(r, name) is not None])
        for name in fields
    }
    return AggregateMetrics(**summaries)
