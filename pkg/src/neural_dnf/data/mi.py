"""Mutual-information attribute filter for multi-label data."""
from __future__ import annotations

import numpy as np

from .dataset import MULTILABEL, Dataset


def _xlogx(p: np.ndarray) -> np.ndarray:
    # 0 log 0 = 0
    return np.where(p > 0, p * np.log(np.where(p > 0, p, 1.0)), 0.0)


def mutual_information(x, y) -> float:
    """Plug-in I(X;Y) = H(X) - H(X|Y) in nats for a binary X.

    ``y`` is any categorical per-sample value: a 1-D array of codes or a 2-D
    array whose rows are treated as one combined value.
    """
    x = np.asarray(x)
    y = np.asarray(y)
    if x.ndim != 1 or y.shape[0] != x.shape[0]:
        raise ValueError(f"length mismatch: {x.shape[0]} vs {y.shape[0]}")
    if x.size == 0:
        raise ValueError("mutual information of empty samples")
    _, codes = np.unique(y.reshape(len(y), -1), axis=0, return_inverse=True)
    codes = codes.reshape(-1)
    n = x.size
    x1 = x.astype(bool)

    p1 = x1.mean()
    h_x = -(_xlogx(np.array(p1)) + _xlogx(np.array(1 - p1)))

    count_y = np.bincount(codes)
    count_1y = np.bincount(codes, weights=x1, minlength=count_y.size)
    p_y = count_y / n
    p1_y = count_1y / count_y
    h_x_given_y = -np.sum(p_y * (_xlogx(p1_y) + _xlogx(1 - p1_y)))
    return float(max(0.0, h_x - h_x_given_y))


def label_combinations(dataset: Dataset) -> np.ndarray:
    return dataset.y.reshape(len(dataset), -1)


def attribute_mi(dataset: Dataset) -> np.ndarray:
    y = label_combinations(dataset)
    return np.array([mutual_information(dataset.X[:, j], y) for j in range(dataset.n_attributes)])


def filter_by_mi(dataset: Dataset, t: float) -> Dataset:
    """Keep attributes whose MI with the label combination is >= t."""
    if dataset.task != MULTILABEL:
        raise ValueError("mutual-information filtering applies to multi-label datasets")
    keep = attribute_mi(dataset) >= t
    if not keep.any():
        raise ValueError(f"no attribute has mutual information >= {t}")
    out = dataset.select_attributes(keep)
    out.metadata = {**dataset.metadata, "mi_threshold": t}
    return out
