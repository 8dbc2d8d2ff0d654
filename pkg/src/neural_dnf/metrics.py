"""Classification metrics used across training and the rule pipeline."""
from __future__ import annotations

import numpy as np


def accuracy(predicted, targets) -> float:
    predicted = np.asarray(predicted)
    targets = np.asarray(targets)
    if predicted.shape != targets.shape:
        raise ValueError(f"length mismatch: {predicted.shape} vs {targets.shape}")
    if predicted.size == 0:
        return 0.0
    return float(np.mean(predicted == targets))


def jaccard_score(predicted: set, target: set) -> float:
    """|P & T| / |P | T|. Two empty sets agree perfectly (1.0)."""
    union = len(predicted | target)
    if union == 0:
        return 1.0
    return len(predicted & target) / union


def mean_jaccard(predicted, targets) -> float:
    """Sample-averaged Jaccard over boolean indicator matrices (n, k)."""
    p = np.asarray(predicted, dtype=bool)
    t = np.asarray(targets, dtype=bool)
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {t.shape}")
    if p.shape[0] == 0:
        return 0.0
    inter = (p & t).sum(axis=1)
    union = (p | t).sum(axis=1)
    scores = np.where(union == 0, 1.0, inter / np.maximum(union, 1))
    return float(scores.mean())


def macro_f1(predicted, targets, n_labels: int) -> float:
    """Unweighted mean of per-label F1; a label with no predicted and no
    actual positives scores 0."""
    p = np.asarray(predicted, dtype=bool)
    t = np.asarray(targets, dtype=bool)
    if p.shape != t.shape or p.ndim != 2 or p.shape[1] != n_labels:
        raise ValueError(f"arity mismatch: predicted {p.shape}, targets {t.shape}, n_labels {n_labels}")
    tp = (p & t).sum(axis=0)
    fp = (p & ~t).sum(axis=0)
    fn = (~p & t).sum(axis=0)
    denom = 2 * tp + fp + fn
    f1 = np.where(denom == 0, 0.0, 2 * tp / np.maximum(denom, 1))
    return float(f1.mean())


def score(metric: str, outputs, targets) -> float:
    """Score raw outputs (n, k) against boolean targets (n, k).

    Jaccard and macro F1 read an output as true when it is > 0; accuracy
    takes the row argmax. Boolean outputs (rule evaluations) work as-is.
    """
    y = np.asarray(outputs, dtype=np.float64)
    t = np.asarray(targets, dtype=bool)
    if metric == "jaccard":
        return mean_jaccard(y > 0, t)
    if metric == "macro_f1":
        return macro_f1(y > 0, t, t.shape[1])
    if metric == "accuracy":
        return accuracy(np.argmax(y, axis=1), np.argmax(t, axis=1))
    raise ValueError(f"unknown metric {metric!r}")


METRICS = ("jaccard", "macro_f1", "accuracy")
