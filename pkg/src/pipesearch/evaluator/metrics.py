"""Classification metrics computed from shared confusion counts.

accuracy is the plain correct fraction; precision, recall and f1 are
macro-averaged over the label dictionary the classifier was fitted with,
with empty denominators scored 0.
"""

from __future__ import annotations

import numpy as np

__all__ = ["confusion_counts", "compute_metrics", "per_class_metrics"]


def confusion_counts(y_true, y_pred, labels: list[str]):
    """Per-class true positive / false positive / false negative counts."""
    index = {label: i for i, label in enumerate(labels)}
    tp = np.zeros(len(labels), dtype=np.int64)
    fp = np.zeros(len(labels), dtype=np.int64)
    fn = np.zeros(len(labels), dtype=np.int64)
    correct = 0
    for truth, guess in zip(y_true, y_pred):
        if truth == guess:
            correct += 1
            tp[index[truth]] += 1
        else:
            if guess in index:
                fp[index[guess]] += 1
            if truth in index:
                fn[index[truth]] += 1
    return tp, fp, fn, correct


def _safe_div(num: float, den: float) -> float:
    return num / den if den > 0 else 0.0


def per_class_metrics(y_true, y_pred, labels: list[str]) -> dict[str, dict[str, float]]:
    """precision/recall/f1 per class name."""
    tp, fp, fn, _ = confusion_counts(y_true, y_pred, labels)
    out: dict[str, dict[str, float]] = {}
    for i, label in enumerate(labels):
        precision = _safe_div(tp[i], tp[i] + fp[i])
        recall = _safe_div(tp[i], tp[i] + fn[i])
        f1 = _safe_div(2 * precision * recall, precision + recall)
        out[label] = {"precision": precision, "recall": recall, "f1": f1}
    return out


def compute_metrics(y_true, y_pred, labels: list[str]) -> dict[str, float]:
    """accuracy plus macro precision/recall/f1 over `labels`."""
    if len(y_true) == 0:
        raise ValueError("cannot score an empty evaluation set")
    tp, fp, fn, correct = confusion_counts(y_true, y_pred, labels)
    precisions, recalls, f1s = [], [], []
    for i in range(len(labels)):
        p = _safe_div(tp[i], tp[i] + fp[i])
        r = _safe_div(tp[i], tp[i] + fn[i])
        precisions.append(p)
        recalls.append(r)
        f1s.append(_safe_div(2 * p * r, p + r))
    return {
        "accuracy": correct / len(y_true),
        "precision": float(np.mean(precisions)),
        "recall": float(np.mean(recalls)),
        "f1": float(np.mean(f1s)),
    }
