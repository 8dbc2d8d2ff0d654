"""Turning a trained neural DNF into rules: prune -> finetune -> threshold
-> extract. The EO constraint layer is only attached while finetuning;
every other stage works on the plain DNF."""
from __future__ import annotations

import dataclasses
import logging
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import metrics
from .core import OptimConfig
from .data.dataset import Dataset
from .models import SATURATION, NeuralDnfModel
from .rules import Literal, Rule, RuleSet, evaluate_matrix, rule_length_stats, sanitize_atom
from .semi_symbolic import DeltaSchedule
from .training import TrainConfig, _fit, default_metric, evaluate_model

log = logging.getLogger(__name__)

STAGES = ("train", "prune", "finetune", "threshold", "rules")


class ExtractionError(RuntimeError):
    """Model is not in a state rules can be read from."""


class UnsupportedModelError(TypeError):
    pass


@dataclass
class PostTrainConfig:
    epsilon: float = 0.005
    metric: Optional[str] = None  # None: Jaccard for multi-class, macro F1 for multi-label
    threshold_step: float = 0.01
    finetune_epochs: int = 50
    finetune_optim: OptimConfig = field(default_factory=OptimConfig)

    def __post_init__(self):
        if isinstance(self.finetune_optim, dict):
            self.finetune_optim = OptimConfig(**self.finetune_optim)
        if self.epsilon < 0:
            raise ValueError(f"prune epsilon must be >= 0, got {self.epsilon}")
        if not self.threshold_step > 0:
            raise ValueError("threshold grid step must be positive")
        if self.finetune_epochs < 0:
            raise ValueError("finetune epochs must be >= 0")
        if self.metric is not None and self.metric not in metrics.METRICS:
            raise ValueError(f"unknown metric {self.metric!r}")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class PipelineReport:
    metric: str
    split: str
    stages: list = field(default_factory=list)  # [(stage, value)] in pipeline order
    threshold: Optional[float] = None
    n_pruned: int = 0
    n_removed_disjuncts: int = 0
    rule_length: Optional[tuple] = None

    def record(self, stage: str, value: float) -> None:
        self.stages.append((stage, float(value)))
        log.info("%s %s: %.4f", stage, self.metric, value)

    def value(self, stage: str) -> float:
        return dict(self.stages)[stage]

    def to_dict(self) -> dict:
        d = asdict(self)
        d["stages"] = [{"stage": s, "value": v} for s, v in self.stages]
        return d


def _check_dnf(model) -> None:
    if getattr(model, "kind", None) not in ("vanilla", "eo"):
        raise UnsupportedModelError(f"post-training needs a neural DNF model, got {getattr(model, 'kind', type(model).__name__)!r}")


class _PruneEvaluator:
    """Train-set metric of the plain DNF with cached intermediate values, so
    a tentative single-weight change only recomputes the affected outputs.

    Affected columns are recomputed from scratch rather than patched with
    deltas: an output that should be exactly 0 (no disjuncts left) must not
    pick up rounding residue, because 0 reads as false and 1e-16 as true.
    """

    def __init__(self, plain: NeuralDnfModel, dataset: Dataset, metric: str):
        self.plain = plain
        self.metric = metric
        self.x = dataset.bipolar()
        self.targets = dataset.target_matrix()
        self.h = plain.conj.forward(self.x)
        self.z = plain.disj.preactivation(self.h)

    def score(self, z: np.ndarray) -> float:
        return metrics.score(self.metric, z, self.targets)

    def _outputs(self, h: np.ndarray, w: np.ndarray, rows) -> np.ndarray:
        a = np.abs(w[rows])
        return h @ w[rows].T + self.plain.disj.signed_delta * (a.max(axis=1) - a.sum(axis=1))

    def disj_trial(self, k: int, j: int) -> np.ndarray:
        w = self.plain.disj.weights.copy()
        w[k, j] = 0.0
        z = self.z.copy()
        z[:, [k]] = self._outputs(self.h, w, [k])
        return z

    def conj_trial(self, j: int, i: int, drop_column: bool = False) -> tuple[np.ndarray, np.ndarray]:
        c = self.plain.conj
        row = c.weights[j].copy()
        row[i] = 0.0
        a = np.abs(row)
        h_j = np.tanh(self.x @ row + c.signed_delta * (a.max() - a.sum()))
        h = self.h.copy()
        h[:, j] = h_j
        w = self.plain.disj.weights
        rows = np.flatnonzero(w[:, j])
        if drop_column:
            w = w.copy()
            w[:, j] = 0.0
        z = self.z.copy()
        if rows.size:
            z[:, rows] = self._outputs(h, w, rows)
        return z, h_j


def _prune(model, dataset: Dataset, epsilon: float, metric: Optional[str] = None):
    """Greedy single-weight pruning; returns (model copy, n_pruned, n_removed)."""
    _check_dnf(model)
    if epsilon < 0:
        raise ValueError(f"prune epsilon must be >= 0, got {epsilon}")
    metric = metric or default_metric(dataset)
    model = model.copy()
    plain = model.plain()
    ev = _PruneEvaluator(plain, dataset, metric)
    current = ev.score(ev.z)
    n_pruned = 0

    disj = plain.disj
    for k, j in zip(*np.nonzero(disj.weights)):
        z = ev.disj_trial(k, j)
        s = ev.score(z)
        if s >= current - epsilon:
            disj.weights[k, j] = 0.0
            ev.z, current = z, s
            n_pruned += 1

    conj = plain.conj
    n_removed = 0
    for j, i in zip(*np.nonzero(conj.weights)):
        # emptying a row also drops the disjuncts that use it, so the trial
        # includes that consequence and the epsilon check covers it
        empties = np.count_nonzero(conj.weights[j]) == 1 and disj.weights[:, j].any()
        z, h_j = ev.conj_trial(j, i, drop_column=empties)
        s = ev.score(z)
        if s >= current - epsilon:
            conj.weights[j, i] = 0.0
            if empties:
                n_removed += int(np.count_nonzero(disj.weights[:, j]))
                disj.weights[:, j] = 0.0
            ev.z, ev.h[:, j], current = z, h_j, s
            n_pruned += 1

    # rows that were empty before pruning started
    n_removed += drop_empty_disjuncts(plain)
    for layer in (conj, disj):
        layer.mask = (layer.weights != 0).astype(np.float64)
    return model, n_pruned, n_removed


def drop_empty_disjuncts(plain: NeuralDnfModel) -> int:
    """Zero disjunctive weights on all-zero conjunction rows, in place;
    returns how many were nonzero."""
    empty = ~plain.conj.weights.any(axis=1)
    n = int(np.count_nonzero(plain.disj.weights[:, empty]))
    plain.disj.weights[:, empty] = 0.0
    plain.disj.mask[:, empty] = 0.0
    return n


def prune(model, dataset: Dataset, epsilon: float = 0.005, metric: Optional[str] = None):
    """Zero every weight whose removal costs at most ``epsilon`` of the
    train-set metric, disjunctive layer first, then conjunctive; finally drop
    disjuncts that point at empty conjunctions. Returns a pruned copy with
    prune masks set."""
    return _prune(model, dataset, epsilon, metric)[0]


def finetune(model, train_set: Dataset, val_set: Optional[Dataset], cfg: TrainConfig):
    """Retrain a pruned copy with masks enforced and delta held at its
    current value. ``cfg.epochs == 0`` returns an unchanged copy."""
    _check_dnf(model)
    model = model.copy()
    if cfg.epochs == 0:
        return model
    d = model.delta
    fixed = DeltaSchedule(initial=d, increment=0.0, interval=1, final=d)
    _fit(model, train_set, val_set, dataclasses.replace(cfg, delta=fixed))
    return model


def apply_threshold(model, t: float) -> NeuralDnfModel:
    """Plain-DNF copy with |w| > t snapped to +-6 and the rest to 0."""
    _check_dnf(model)
    if t < 0:
        raise ValueError("threshold must be >= 0")
    plain = model.plain().copy()
    for layer in (plain.conj, plain.disj):
        w = layer.weights
        layer.weights = np.where(np.abs(w) > t, np.sign(w) * SATURATION, 0.0)
        layer.mask = (layer.weights != 0).astype(np.float64)
    plain.set_delta(1.0)
    return plain


def threshold_grid(model, step: float = 0.01) -> np.ndarray:
    plain = model.plain()
    stop = max(np.abs(plain.conj.weights).max(), np.abs(plain.disj.weights).max())
    grid = np.round(np.arange(0.0, stop, step), 10)
    return grid if grid.size else np.array([0.0])


def threshold_search(model, val_set: Dataset, grid: Optional[Sequence[float]] = None, metric: Optional[str] = None):
    """Smallest grid threshold with the best validation metric; returns
    (t*, thresholded plain DNF).

    A threshold can empty a conjunction whose disjunctive weight survives,
    so each candidate also drops such disjuncts (as pruning does) and the
    returned model is always extractable.
    """
    _check_dnf(model)
    grid = threshold_grid(model) if grid is None else np.asarray(grid, dtype=np.float64)
    if grid.size == 0:
        raise ValueError("threshold grid is empty")
    metric = metric or default_metric(val_set)
    best_t, best_s, best_m = None, -np.inf, None
    for t in grid:
        m = apply_threshold(model, float(t))
        drop_empty_disjuncts(m)
        s = evaluate_model(m, val_set, metric)
        if s > best_s:
            best_t, best_s, best_m = float(t), s, m
    return best_t, best_m


def extract_rules(model, attribute_names: Sequence[str], target_names: Sequence[str]) -> RuleSet:
    """Read a thresholded DNF as rules.

    A +6 disjunct inlines the conjunction body into the target rule; a -6
    disjunct becomes ``target :- not conj_j.`` plus a definition of conj_j.
    """
    _check_dnf(model)
    plain = model.plain()
    conj, disj = plain.conj.weights, plain.disj.weights
    for name, w in (("conjunctive", conj), ("disjunctive", disj)):
        if not np.isin(w, (0.0, SATURATION, -SATURATION)).all():
            raise ExtractionError(f"{name} layer is not discretised to {{0, +-6}}; threshold it first")
    if len(attribute_names) != plain.n_in or len(target_names) != plain.n_out:
        raise ValueError("name lists do not match the model's input/output sizes")
    attrs = [sanitize_atom(a) for a in attribute_names]
    targets = [sanitize_atom(t) for t in target_names]

    bodies = [
        tuple(Literal(attrs[i], conj[j, i] < 0) for i in np.flatnonzero(conj[j]))
        for j in range(plain.n_conj)
    ]
    rules = []
    for k, j in zip(*np.nonzero(disj)):
        if not bodies[j]:
            raise ExtractionError(f"disjunct {targets[k]} references empty conjunction {j}")
        if disj[k, j] > 0:
            rules.append(Rule(targets[k], bodies[j]))
        else:
            aux = f"conj_{j}"
            rules.append(Rule(targets[k], (Literal(aux, True),)))
            rules.append(Rule(aux, bodies[j]))
    return RuleSet(tuple(rules), input_atoms=frozenset(attrs), target_atoms=frozenset(targets))


def evaluate_rules(rules: RuleSet, dataset: Dataset, metric: Optional[str] = None) -> float:
    fired = evaluate_matrix(
        rules,
        dataset.X,
        [sanitize_atom(a) for a in dataset.attribute_names],
        [sanitize_atom(t) for t in dataset.target_names],
    )
    return metrics.score(metric or default_metric(dataset), fired, dataset.target_matrix())


def run_pipeline(
    model,
    train_set: Dataset,
    val_set: Dataset,
    eval_set: Dataset,
    train_cfg: TrainConfig,
    cfg: PostTrainConfig,
    eval_split: str = "test",
):
    """All four stages; the report scores every stage on ``eval_set``.

    Returns (report, {"pruned", "finetuned", "thresholded", "rules"}).
    """
    _check_dnf(model)
    metric = cfg.metric or default_metric(train_set)
    report = PipelineReport(metric, eval_split)
    report.record("train", evaluate_model(model, eval_set, metric))

    pruned, report.n_pruned, report.n_removed_disjuncts = _prune(model, train_set, cfg.epsilon, metric)
    report.record("prune", evaluate_model(pruned, eval_set, metric))

    ft_cfg = dataclasses.replace(train_cfg, epochs=cfg.finetune_epochs, optim=cfg.finetune_optim)
    finetuned = finetune(pruned, train_set, val_set, ft_cfg)
    report.record("finetune", evaluate_model(finetuned, eval_set, metric))

    grid = threshold_grid(finetuned, cfg.threshold_step)
    report.threshold, thresholded = threshold_search(finetuned, val_set, grid, metric)
    report.record("threshold", evaluate_model(thresholded, eval_set, metric))

    rules = extract_rules(thresholded, train_set.attribute_names, train_set.target_names)
    report.record("rules", evaluate_rules(rules, eval_set, metric))
    if any(r.head in rules.target_atoms for r in rules.rules):
        report.rule_length = rule_length_stats(rules)
    return report, {"pruned": pruned, "finetuned": finetuned, "thresholded": thresholded, "rules": rules}
