"""Confusion-matrix metrics and the threshold-sweep AUROC.

All scalar metrics follow the zero-denominator convention: return 0 and
record the metric name in the caller-supplied ``flags`` set. Ranking-based
quantities (the ROC sweep and the single-threshold balanced rate) need both
classes present and raise otherwise; ``metric_set`` converts that into a
NaN value plus a degeneracy flag so report rows stay rectangular.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

TABLE_COLUMNS = ("Precision", "Recall", "F1-score", "Accuracy", "MCC", "AUROC", "Kappa")


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be non-negative")

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion(scores, labels, threshold: float = 0.5) -> Confusion:
    """Tally outcomes, predicting positive iff score >= threshold.

    The >= tie rule is load-bearing: a score exactly at the threshold counts
    as a positive prediction.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    if scores.shape != labels.shape:
        raise ValueError(f"length mismatch: {scores.shape} scores vs {labels.shape} labels")
    if scores.size == 0:
        raise ValueError("empty input")
    if scores.min() < 0 or scores.max() > 1:
        raise ValueError("scores must lie in [0, 1]")
    if not np.isin(labels, (0, 1)).all():
        raise ValueError("labels must be binary")
    pred = scores >= threshold
    actual = labels == 1
    return Confusion(
        tp=int(np.sum(pred & actual)),
        fp=int(np.sum(pred & ~actual)),
        tn=int(np.sum(~pred & ~actual)),
        fn=int(np.sum(~pred & actual)),
    )


def _ratio(num: float, den: float, name: str, flags) -> float:
    if den == 0:
        if flags is not None:
            flags.add(name)
        return 0.0
    return num / den


def basic_metrics(c: Confusion, flags: set | None = None):
    """(precision, recall, f1, accuracy)."""
    if c.total == 0:
        raise ValueError("empty confusion")
    precision = _ratio(c.tp, c.tp + c.fp, "precision", flags)
    recall = _ratio(c.tp, c.tp + c.fn, "recall", flags)
    f1 = _ratio(2.0 * precision * recall, precision + recall, "f1", flags)
    accuracy = (c.tp + c.tn) / c.total
    return precision, recall, f1, accuracy


def mcc(c: Confusion, flags: set | None = None) -> float:
    """Matthews correlation; 0 with a flag when any marginal is empty."""
    factors = (c.tp + c.fp, c.tp + c.fn, c.tn + c.fp, c.tn + c.fn)
    if 0 in factors:
        if flags is not None:
            flags.add("mcc")
        return 0.0
    num = c.tp * c.tn - c.fp * c.fn
    return num / math.sqrt(math.prod(float(f) for f in factors))


def kappa(c: Confusion, flags: set | None = None) -> float:
    """Chance-corrected agreement:
    2(tp*tn - fp*fn) / ((tp+fp)(fp+tn) + (tp+fn)(fn+tn))."""
    den = (c.tp + c.fp) * (c.fp + c.tn) + (c.tp + c.fn) * (c.fn + c.tn)
    num = 2.0 * (c.tp * c.tn - c.fp * c.fn)
    return _ratio(num, den, "kappa", flags)


def balanced_rate(c: Confusion) -> float:
    """Mean of the true-positive and true-negative rates at the decision
    threshold. Some published evaluations print this quantity in their AUROC
    column; it is reported here under its own name alongside the ROC sweep.
    """
    if c.tp + c.fn == 0 or c.tn + c.fp == 0:
        raise ValueError("balanced rate needs both classes present")
    return 0.5 * (c.tp / (c.tp + c.fn) + c.tn / (c.tn + c.fp))


def roc_points(scores, labels):
    """(fpr, tpr) arrays traced over all distinct score thresholds,
    beginning at (0, 0) and ending at (1, 1)."""
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels)
    n_pos = int(np.sum(labels == 1))
    n_neg = labels.size - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC needs both classes present")
    order = np.argsort(-scores, kind="stable")
    sorted_scores = scores[order]
    sorted_pos = (labels[order] == 1).astype(np.int64)
    # group ties: keep the last index of each distinct score
    boundary = np.nonzero(np.diff(sorted_scores))[0]
    idx = np.concatenate([boundary, [scores.size - 1]])
    tps = np.cumsum(sorted_pos)[idx]
    fps = (idx + 1) - tps
    tpr = np.concatenate([[0.0], tps / n_pos])
    fpr = np.concatenate([[0.0], fps / n_neg])
    return fpr, tpr


def auroc_sweep(scores, labels) -> float:
    """Trapezoidal area under the ROC curve over all distinct thresholds.

    Equivalent to P(score_pos > score_neg) + 0.5 P(tie) over positive /
    negative pairs.
    """
    fpr, tpr = roc_points(scores, labels)
    return float(np.trapezoid(tpr, fpr))


@dataclass(frozen=True)
class MetricSet:
    """The seven derived scores plus degeneracy bookkeeping.

    ``auroc_sweep`` is the ROC-curve area; ``balanced_rate`` the
    single-threshold form. ``degenerate_flags`` names every metric whose
    zero-denominator (or single-class) convention fired.
    """

    precision: float
    recall: float
    f1: float
    accuracy: float
    mcc: float
    kappa: float
    auroc_sweep: float
    balanced_rate: float
    degenerate_flags: frozenset[str]
    confusion: Confusion | None = None

    def value(self, column: str, paper_parity_auroc: bool = False) -> float:
        """Look up a report-table column value."""
        mapping = {
            "Precision": self.precision,
            "Recall": self.recall,
            "F1-score": self.f1,
            "Accuracy": self.accuracy,
            "MCC": self.mcc,
            "AUROC": self.balanced_rate if paper_parity_auroc else self.auroc_sweep,
            "Kappa": self.kappa,
        }
        return mapping[column]


def metric_set(scores, labels, threshold: float = 0.5) -> MetricSet:
    """Assemble every metric for one score/label vector pair."""
    c = confusion(scores, labels, threshold)
    flags: set[str] = set()
    precision, recall, f1, accuracy = basic_metrics(c, flags)
    mcc_value = mcc(c, flags)
    kappa_value = kappa(c, flags)
    try:
        balanced = balanced_rate(c)
    except ValueError:
        flags.add("balanced_rate")
        balanced = float("nan")
    try:
        auroc = auroc_sweep(scores, labels)
    except ValueError:
        flags.add("auroc_sweep")
        auroc = float("nan")
    return MetricSet(
        precision=precision,
        recall=recall,
        f1=f1,
        accuracy=accuracy,
        mcc=mcc_value,
        kappa=kappa_value,
        auroc_sweep=auroc,
        balanced_rate=balanced,
        degenerate_flags=frozenset(flags),
        confusion=c,
    )


def mean_metric_set(sets) -> MetricSet:
    """Arithmetic mean per metric; flags union; confusion counts summed."""
    sets = list(sets)
    if not sets:
        raise ValueError("no metric sets to average")

    def avg(attr):
        return float(np.mean([getattr(s, attr) for s in sets]))

    total = None
    if all(s.confusion is not None for s in sets):
        total = Confusion(
            tp=sum(s.confusion.tp for s in sets),
            fp=sum(s.confusion.fp for s in sets),
            tn=sum(s.confusion.tn for s in sets),
            fn=sum(s.confusion.fn for s in sets),
        )
    return MetricSet(
        precision=avg("precision"),
        recall=avg("recall"),
        f1=avg("f1"),
        accuracy=avg("accuracy"),
        mcc=avg("mcc"),
        kappa=avg("kappa"),
        auroc_sweep=avg("auroc_sweep"),
        balanced_rate=avg("balanced_rate"),
        degenerate_flags=frozenset().union(*(s.degenerate_flags for s in sets)),
        confusion=total,
    )
