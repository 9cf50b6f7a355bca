"""Segmentation and ranking evaluation metrics.

The multi-class confusion matrix (rows = truth, columns = prediction) is
the base object; per-class rates come from its one-vs-rest collapse.
"Average accuracy" is the unweighted mean of per-class recalls, which is
what makes it robust to imbalanced test sets.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .cube import CLASS_NAMES, NUM_CLASSES
from .errors import UndefinedMetricError


@dataclass(frozen=True)
class ClassBinaryRates:
    tpr: float
    tnr: float
    fpr: float
    fnr: float


@dataclass(frozen=True)
class MetricsReport:
    average_accuracy: float
    overall_accuracy: float
    f1_per_class: tuple[float, ...]
    macro_f1: float
    rates_per_class: tuple[ClassBinaryRates, ...]
    distance_per_class: tuple[float, ...]

    def as_rows(self) -> list[tuple[str, str, float]]:
        """Flat (metric, class, value) rows for the CLI table."""
        rows: list[tuple[str, str, float]] = [
            ("average_accuracy", "all", self.average_accuracy),
            ("overall_accuracy", "all", self.overall_accuracy),
            ("macro_f1", "all", self.macro_f1),
        ]
        for i, name in enumerate(CLASS_NAMES):
            r = self.rates_per_class[i]
            rows += [
                ("f1", name, self.f1_per_class[i]),
                ("tpr", name, r.tpr),
                ("tnr", name, r.tnr),
                ("fpr", name, r.fpr),
                ("fnr", name, r.fnr),
                ("tradeoff_distance", name, self.distance_per_class[i]),
            ]
        return rows


def confusion(pred: np.ndarray, truth: np.ndarray) -> np.ndarray:
    """3x3 counts over all pixels; rows are truth, columns are prediction."""
    pred = np.asarray(pred)
    truth = np.asarray(truth)
    if pred.shape != truth.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape} vs truth {truth.shape}")
    joint = truth.reshape(-1).astype(np.int64) * NUM_CLASSES + pred.reshape(-1).astype(np.int64)
    return np.bincount(joint, minlength=NUM_CLASSES * NUM_CLASSES).reshape(
        NUM_CLASSES, NUM_CLASSES
    )


def binary_rates(cm: np.ndarray, class_index: int) -> ClassBinaryRates:
    """One-vs-rest TPR/TNR/FPR/FNR for one class."""
    cm = np.asarray(cm)
    tp = int(cm[class_index, class_index])
    fn = int(cm[class_index].sum() - tp)
    fp = int(cm[:, class_index].sum() - tp)
    tn = int(cm.sum() - tp - fn - fp)
    if tp + fn == 0:
        raise UndefinedMetricError(f"class {class_index} has no positive pixels")
    if tn + fp == 0:
        raise UndefinedMetricError(f"class {class_index} has no negative pixels")
    # rational arithmetic keeps TPR+FNR and TNR+FPR complements exact
    tpr = Fraction(tp, tp + fn)
    fpr = Fraction(fp, fp + tn)
    return ClassBinaryRates(float(tpr), float(1 - fpr), float(fpr), float(1 - tpr))


def average_accuracy(cm: np.ndarray) -> float:
    """Unweighted mean of per-class recalls (balanced accuracy)."""
    cm = np.asarray(cm)
    totals = cm.sum(axis=1)
    if np.any(totals == 0):
        absent = [i for i, t in enumerate(totals) if t == 0]
        raise UndefinedMetricError(f"classes {absent} absent from the truth labels")
    return float((np.diag(cm) / totals).mean())


def overall_accuracy(cm: np.ndarray) -> float:
    cm = np.asarray(cm)
    total = cm.sum()
    if total == 0:
        raise UndefinedMetricError("empty confusion matrix")
    return float(np.trace(cm) / total)


def f1(cm: np.ndarray, class_index: int) -> float:
    """F1 = 2TP / (2TP + FP + FN); defined as 0 when that denominator is 0."""
    cm = np.asarray(cm)
    tp = cm[class_index, class_index]
    fn = cm[class_index].sum() - tp
    fp = cm[:, class_index].sum() - tp
    denom = 2 * tp + fp + fn
    return float(2 * tp / denom) if denom else 0.0


def macro_f1(cm: np.ndarray) -> float:
    return float(np.mean([f1(cm, k) for k in range(NUM_CLASSES)]))


def _average_ranks(values: np.ndarray) -> np.ndarray:
    """1-based ranks with ties receiving the mean of their positions."""
    values = np.asarray(values)
    order = np.argsort(values, kind="stable")
    ranks = np.empty(len(values), dtype=np.float64)
    i = 0
    while i < len(values):
        j = i
        while j + 1 < len(values) and values[order[j + 1]] == values[order[i]]:
            j += 1
        ranks[order[i : j + 1]] = (i + j) / 2 + 1
        i = j + 1
    return ranks


def spearman(a: np.ndarray, b: np.ndarray) -> float:
    """Rank correlation: Pearson over average ranks, in [-1, 1]."""
    a = np.asarray(a)
    b = np.asarray(b)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("spearman needs two equal-length 1-D sequences")
    if len(a) < 2:
        raise ValueError("spearman needs at least 2 items")
    ra, rb = _average_ranks(a), _average_ranks(b)
    da, db = ra - ra.mean(), rb - rb.mean()
    denom = math.sqrt(float(da @ da) * float(db @ db))
    if denom == 0.0:
        raise UndefinedMetricError("rank variance is zero (all values tied)")
    return float(da @ db / denom)


def coverage_mae(predicted: np.ndarray, true: np.ndarray) -> float:
    """Mean absolute error between per-image coverage fractions."""
    predicted = np.asarray(predicted, dtype=np.float64)
    true = np.asarray(true, dtype=np.float64)
    if predicted.shape != true.shape or predicted.ndim != 1 or len(predicted) == 0:
        raise ValueError("coverage lists must be equal-length and non-empty")
    return float(np.abs(predicted - true).mean())


def tradeoff_distance(rates: ClassBinaryRates) -> float:
    """Euclidean distance of the (FPR, FNR) point from the ideal origin."""
    return math.hypot(rates.fpr, rates.fnr)


def metrics_report(pred: np.ndarray, truth: np.ndarray) -> MetricsReport:
    """Full per-class report for a predicted vs ground-truth label map."""
    cm = confusion(pred, truth)
    rates = tuple(binary_rates(cm, k) for k in range(NUM_CLASSES))
    return MetricsReport(
        average_accuracy=average_accuracy(cm),
        overall_accuracy=overall_accuracy(cm),
        f1_per_class=tuple(f1(cm, k) for k in range(NUM_CLASSES)),
        macro_f1=macro_f1(cm),
        rates_per_class=rates,
        distance_per_class=tuple(tradeoff_distance(r) for r in rates),
    )
