"""Confusion matrices and support-weighted precision/recall/F1.

Zero-denominator cells (a class never predicted, or absent from the truth)
score 0 by convention and are flagged in the report rather than silently
averaged away.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np


@dataclass
class ConfusionMatrix:
    counts: np.ndarray  # (C, C) ints, rows = true class, columns = predicted

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def save_csv(self, path, labels: tuple[str, ...] | None = None) -> None:
        n = self.counts.shape[0]
        labels = labels or tuple(str(i) for i in range(n))
        with open(path, "w") as f:
            f.write("," + ",".join(labels) + "\n")
            for i in range(n):
                f.write(labels[i] + "," + ",".join(map(str, self.counts[i].tolist())) + "\n")


@dataclass
class MetricsReport:
    accuracy: float
    weighted_precision: float
    weighted_recall: float
    weighted_f1: float
    per_class_precision: np.ndarray
    per_class_recall: np.ndarray
    per_class_f1: np.ndarray
    support: np.ndarray
    zero_division_classes: list[int] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "weighted_precision": self.weighted_precision,
            "weighted_recall": self.weighted_recall,
            "weighted_f1": self.weighted_f1,
            "per_class_precision": self.per_class_precision.tolist(),
            "per_class_recall": self.per_class_recall.tolist(),
            "per_class_f1": self.per_class_f1.tolist(),
            "support": self.support.tolist(),
            "zero_division_classes": self.zero_division_classes,
        }

    def save_json(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)


def confusion(y_true, y_pred, num_classes: int = 10) -> ConfusionMatrix:
    y_true = np.asarray(y_true, dtype=np.int64)
    y_pred = np.asarray(y_pred, dtype=np.int64)
    if y_true.shape != y_pred.shape:
        raise ValueError(f"length mismatch: {y_true.shape} vs {y_pred.shape}")
    if y_true.size and (min(y_true.min(), y_pred.min()) < 0
                        or max(y_true.max(), y_pred.max()) >= num_classes):
        raise ValueError(f"labels out of range [0, {num_classes})")
    counts = np.zeros((num_classes, num_classes), dtype=np.int64)
    np.add.at(counts, (y_true, y_pred), 1)
    return ConfusionMatrix(counts)


def weighted_metrics(cm: ConfusionMatrix) -> MetricsReport:
    """Per-class precision/recall/F1 and their support-weighted means.

    Weighted recall telescopes to trace/total, so it always equals accuracy.
    """
    counts = cm.counts.astype(np.float64)
    total = counts.sum()
    if total == 0:
        raise ValueError("empty confusion matrix")
    tp = np.diag(counts)
    support = counts.sum(axis=1)   # true-class counts
    predicted = counts.sum(axis=0)

    flagged = sorted(set(np.flatnonzero(predicted == 0).tolist())
                     | set(np.flatnonzero(support == 0).tolist()))
    precision = np.divide(tp, predicted, out=np.zeros_like(tp), where=predicted > 0)
    recall = np.divide(tp, support, out=np.zeros_like(tp), where=support > 0)
    pr = precision + recall
    f1 = np.divide(2 * precision * recall, pr, out=np.zeros_like(tp), where=pr > 0)

    weights = support / total
    return MetricsReport(
        accuracy=float(tp.sum() / total),
        weighted_precision=float(weights @ precision),
        weighted_recall=float(weights @ recall),
        weighted_f1=float(weights @ f1),
        per_class_precision=precision,
        per_class_recall=recall,
        per_class_f1=f1,
        support=support.astype(np.int64),
        zero_division_classes=flagged,
    )


def append_results_row(path, model: str, representation: str,
                       report: MetricsReport) -> None:
    """Accumulate a (model x representation x four metrics) CSV."""
    import os
    header = "model,representation,precision,recall,f1,accuracy\n"
    new = not os.path.exists(path)
    with open(path, "a") as f:
        if new:
            f.write(header)
        f.write(f"{model},{representation},{report.weighted_precision:.4f},"
                f"{report.weighted_recall:.4f},{report.weighted_f1:.4f},"
                f"{report.accuracy:.4f}\n")
