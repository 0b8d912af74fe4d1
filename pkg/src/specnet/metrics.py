"""Classification metrics: confusion matrix, OA, AA, and Cohen's kappa.

Conventions: confusion-matrix rows are the true class, columns the
predicted class. OA is correct/total; AA is the mean per-class recall;
kappa is (OA - theta) / (1 - theta) with theta the chance agreement from
the marginal products.
"""
from __future__ import annotations

import csv
import warnings
from typing import Sequence

import numpy as np

from .errors import ShapeError


def confusion(y_true, y_pred, n_classes: int) -> np.ndarray:
    """Count matrix: entry (i, j) is how often true class i was predicted j."""
    y_true = np.asarray(y_true, dtype=np.int64).reshape(-1)
    y_pred = np.asarray(y_pred, dtype=np.int64).reshape(-1)
    if y_true.shape != y_pred.shape:
        raise ShapeError(f"confusion: {y_true.size} true labels vs {y_pred.size} predictions")
    for name, labels in (("true", y_true), ("predicted", y_pred)):
        bad = np.flatnonzero((labels < 0) | (labels >= n_classes))
        if bad.size:
            raise ShapeError(
                f"confusion: {name} label {labels[bad[0]]} at index {int(bad[0])} "
                f"outside [0, {n_classes})"
            )
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (y_true, y_pred), 1)
    return cm


def _check_matrix(cm) -> np.ndarray:
    cm = np.asarray(cm)
    if cm.ndim != 2 or cm.shape[0] != cm.shape[1]:
        raise ShapeError(f"confusion matrix must be square, got shape {cm.shape}")
    if np.any(cm < 0):
        raise ShapeError("confusion matrix entries must be non-negative")
    return cm.astype(np.float64)


def overall_accuracy(cm) -> float:
    """Correctly classified points divided by the dataset size."""
    cm = _check_matrix(cm)
    total = cm.sum()
    if total == 0:
        raise ShapeError("overall_accuracy: empty confusion matrix")
    return float(np.trace(cm) / total)


def average_accuracy(cm) -> float:
    """Mean per-class recall; classes with no true instances are excluded."""
    cm = _check_matrix(cm)
    row_sums = cm.sum(axis=1)
    present = row_sums > 0
    if not present.any():
        raise ShapeError("average_accuracy: no class has any true instance")
    if not present.all():
        absent = [int(i) for i in np.flatnonzero(~present)]
        warnings.warn(
            f"average_accuracy: class(es) {absent} have no true instances and are excluded",
            stacklevel=2,
        )
    recalls = np.diag(cm)[present] / row_sums[present]
    return float(recalls.mean())


def kappa(cm) -> float:
    """Cohen's kappa: (OA - theta) / (1 - theta), theta from the marginals."""
    cm = _check_matrix(cm)
    total = cm.sum()
    if total == 0:
        raise ShapeError("kappa: empty confusion matrix")
    oa = np.trace(cm) / total
    theta = float(np.dot(cm.sum(axis=1), cm.sum(axis=0)) / total ** 2)
    if abs(1.0 - theta) < 1e-15:
        raise ShapeError(
            f"kappa undefined: chance agreement theta = {theta} (all mass on one class)"
        )
    return float((oa - theta) / (1.0 - theta))


def normalize_rows(cm) -> np.ndarray:
    """Rows divided by their sums; all-zero rows stay all-zero."""
    cm = _check_matrix(cm)
    row_sums = cm.sum(axis=1, keepdims=True)
    safe = np.where(row_sums == 0, 1.0, row_sums)
    return np.where(row_sums == 0, 0.0, cm / safe)


# ---------------------------------------------------------------------------
# Report output
# ---------------------------------------------------------------------------


def write_report(rows: Sequence[tuple[str, float, float, float]], path) -> None:
    """CSV report with one (model, OA, AA, kappa) row per model."""
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["model", "oa", "aa", "kappa"])
        for model, oa, aa, k in rows:
            writer.writerow([model, f"{oa:.6f}", f"{aa:.6f}", f"{k:.6f}"])


def write_confusion_csv(cm, class_names: Sequence[str], path) -> None:
    """Row-normalized confusion matrix as CSV, one row per true class."""
    normalized = normalize_rows(cm)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["true_class"] + [f"pred_{name}" for name in class_names])
        for name, row in zip(class_names, normalized):
            writer.writerow([name] + [repr(float(v)) for v in row])
