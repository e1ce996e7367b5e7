"""PRAUC (average precision), anomaly-discovery counts, and run aggregation."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np
from scipy import stats


@dataclass(frozen=True)
class MetricsRecord:
    iteration: int
    labels_used: int
    prauc: float | None  # None when no ground truth is available (live mode)
    anomalies_discovered: int
    wall_time_ms: float = 0.0

    def to_json(self, include_wall_time: bool = True) -> dict:
        doc = {
            "iteration": self.iteration,
            "labels_used": self.labels_used,
            "prauc": self.prauc,
            "anomalies_discovered": self.anomalies_discovered,
        }
        if include_wall_time:
            doc["wall_time_ms"] = self.wall_time_ms
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "MetricsRecord":
        return cls(int(doc["iteration"]), int(doc["labels_used"]),
                   doc["prauc"], int(doc["anomalies_discovered"]),
                   float(doc.get("wall_time_ms", 0.0)))


@dataclass(frozen=True)
class AggregateCurve:
    mean: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    n_runs: int
    n_padded: int = 0  # runs shorter than the longest, padded by carrying last
    degenerate: bool = False  # single run: CI collapses to the mean


def prauc(scores, labels) -> float:
    """Average precision with the anomaly class (1) positive.

    Ties are grouped at a single threshold; AP = sum over thresholds of
    (delta recall) * (precision at threshold).
    """
    s = np.asarray(scores, dtype=np.float64)
    y = np.asarray(labels)
    if s.shape != y.shape or s.ndim != 1:
        raise ValueError("scores and labels must be 1-D and aligned")
    n_pos = int((y == 1).sum())
    if n_pos == 0:
        raise ValueError("PRAUC undefined without positive labels")
    order = np.argsort(-s, kind="stable")
    s_sorted, y_sorted = s[order], y[order]
    tp = np.cumsum(y_sorted == 1)
    ranks = np.arange(1, len(s) + 1)
    # last position of each tie group is a threshold
    is_cut = np.ones(len(s), dtype=bool)
    is_cut[:-1] = s_sorted[:-1] != s_sorted[1:]
    tp_c, rank_c = tp[is_cut], ranks[is_cut]
    recall = tp_c / n_pos
    precision = tp_c / rank_c
    d_recall = np.diff(recall, prepend=0.0)
    return float((d_recall * precision).sum())


def discovery_count(L: Mapping[int, int] | Sequence[int], truth) -> int:
    """Number of labeled indices whose true label is anomaly."""
    truth = np.asarray(truth)
    idx = list(L.keys()) if isinstance(L, Mapping) else list(L)
    if len(idx) == 0:
        return 0
    return int((truth[np.asarray(idx, dtype=np.int64)] == 1).sum())


def aggregate(series: Sequence[Sequence[float]], clip: tuple[float, float] | None = None) -> AggregateCurve:
    """Per-iteration mean and Student-t 95% CI across runs.

    Shorter runs are padded by carrying their last value. With a single run
    the interval degenerates to the mean. `clip` bounds the reported interval
    (e.g. (0, 1) for PRAUC); means are never clipped.
    """
    if len(series) == 0:
        raise ValueError("no series to aggregate")
    width = max(len(s) for s in series)
    if min(len(s) for s in series) == 0:
        raise ValueError("empty series")
    rows, n_padded = [], 0
    for s in series:
        s = list(s)
        if len(s) < width:
            s = s + [s[-1]] * (width - len(s))
            n_padded += 1
        rows.append(s)
    M = np.asarray(rows, dtype=np.float64)
    n = len(rows)
    mean = M.mean(axis=0)
    if n == 1:
        return AggregateCurve(mean, mean.copy(), mean.copy(), 1, n_padded, degenerate=True)
    half = stats.t.ppf(0.975, n - 1) * M.std(axis=0, ddof=1) / np.sqrt(n)
    lo, hi = mean - half, mean + half
    if clip is not None:
        lo = np.maximum(lo, clip[0])
        hi = np.minimum(hi, clip[1])
    return AggregateCurve(mean, lo, hi, n, n_padded)
