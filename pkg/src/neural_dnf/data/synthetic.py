"""Rule-generated synthetic datasets with a known ground-truth program."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..rules import Literal, Rule, RuleSet, evaluate_matrix
from .dataset import MULTICLASS, MULTILABEL, Dataset


@dataclass
class SyntheticGroundTruth:
    rules: RuleSet
    n_attributes: int
    task: str
    seed: int


def selector_bits(n_classes: int) -> int:
    return max(1, math.ceil(math.log2(n_classes)))


def multiclass_rules(n_classes: int) -> RuleSet:
    """Class i fires exactly on the selector pattern spelling i in binary
    (s0 is the most significant bit)."""
    k = selector_bits(n_classes)
    rules = []
    for i in range(n_classes):
        bits = [(i >> (k - 1 - b)) & 1 for b in range(k)]
        rules.append(Rule(f"c{i}", tuple(Literal(f"s{b}", not bit) for b, bit in enumerate(bits))))
    return RuleSet(tuple(rules))


def gen_synthetic_multiclass(n_classes: int, n_noise_attrs: int, n_samples: int = 10000, seed: int = 73):
    """Selector block plus independent fair-coin noise attributes.

    Assignments whose selector code names no class are redrawn, so every
    sample has exactly one true class.
    """
    if n_classes < 2:
        raise ValueError(f"need at least 2 classes, got {n_classes}")
    if n_noise_attrs < 0 or n_samples < 0:
        raise ValueError("attribute and sample counts must be nonnegative")
    k = selector_bits(n_classes)
    rules = multiclass_rules(n_classes)
    names = [f"s{b}" for b in range(k)] + [f"n{j}" for j in range(n_noise_attrs)]
    targets = [f"c{i}" for i in range(n_classes)]
    rng = np.random.default_rng(seed)
    X = rng.integers(0, 2, size=(n_samples, len(names)), dtype=np.uint8)
    weights = 1 << np.arange(k - 1, -1, -1)
    while True:
        codes = X[:, :k].astype(np.int64) @ weights
        bad = np.flatnonzero(codes >= n_classes)
        if bad.size == 0:
            break
        X[bad, :k] = rng.integers(0, 2, size=(bad.size, k), dtype=np.uint8)
    fired = evaluate_matrix(rules, X, names, targets)
    assert (fired.sum(axis=1) == 1).all()
    y = fired.argmax(axis=1)
    meta = {"generator": "multiclass", "n_classes": n_classes, "n_noise_attrs": n_noise_attrs,
            "n_samples": n_samples, "seed": seed}
    ds = Dataset(names, X, MULTICLASS, y, targets, meta)
    return ds, SyntheticGroundTruth(rules, len(names), MULTICLASS, seed)


def gen_synthetic_multilabel(
    n_labels: int,
    n_attrs: int,
    n_samples: int = 10000,
    seed: int = 73,
    body_size: tuple[int, int] = (2, 5),
    rules_per_label: tuple[int, int] = (1, 3),
):
    """Each label gets a random disjunction of random conjunctions over
    fair-coin attributes; labels are derived by evaluating those rules."""
    if n_labels < 1 or n_attrs < 2:
        raise ValueError("need n_labels >= 1 and n_attrs >= 2")
    lo, hi = body_size
    if lo < 1 or lo > hi or lo > n_attrs:
        raise ValueError(f"body size bounds {body_size} do not fit {n_attrs} attributes")
    hi = min(hi, n_attrs)
    rng = np.random.default_rng(seed)
    names = [f"a{j}" for j in range(n_attrs)]
    targets = [f"l{i}" for i in range(n_labels)]
    rules = []
    for i in range(n_labels):
        for _ in range(int(rng.integers(rules_per_label[0], rules_per_label[1] + 1))):
            size = int(rng.integers(lo, hi + 1))
            attrs = np.sort(rng.choice(n_attrs, size=size, replace=False))
            neg = rng.integers(0, 2, size=size)
            rules.append(Rule(targets[i], tuple(Literal(names[a], bool(n)) for a, n in zip(attrs, neg))))
    rule_set = RuleSet(tuple(rules), target_atoms=frozenset(targets))
    X = rng.integers(0, 2, size=(n_samples, n_attrs), dtype=np.uint8)
    y = evaluate_matrix(rule_set, X, names, targets).astype(np.uint8)
    meta = {"generator": "multilabel", "n_labels": n_labels, "n_attrs": n_attrs,
            "n_samples": n_samples, "seed": seed}
    ds = Dataset(names, X, MULTILABEL, y, targets, meta)
    return ds, SyntheticGroundTruth(rule_set, n_attrs, MULTILABEL, seed)
