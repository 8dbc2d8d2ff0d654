"""Minibatch training for the neural DNF models and the MLP baseline."""
from __future__ import annotations

import csv
import logging
from dataclasses import asdict, dataclass, field
from typing import Optional

import numpy as np

from . import metrics
from .core import (
    AdamState,
    OptimConfig,
    adam_step,
    cross_entropy_batch,
    lr_at_epoch,
)
from .data.dataset import MULTICLASS, Dataset
from .semi_symbolic import DeltaSchedule, delta_at_epoch

log = logging.getLogger(__name__)

LOSSES = ("ce", "bce")


@dataclass
class TrainConfig:
    loss: str = "ce"
    epochs: int = 100
    batch_size: int = 32
    seed: int = 73
    optim: OptimConfig = field(default_factory=OptimConfig)
    delta: DeltaSchedule = field(default_factory=DeltaSchedule)
    l1: float = 1e-4
    shuffle: bool = True

    def __post_init__(self):
        if isinstance(self.optim, dict):
            self.optim = OptimConfig(**self.optim)
        if isinstance(self.delta, dict):
            self.delta = DeltaSchedule(**self.delta)
        if self.loss not in LOSSES:
            raise ValueError(f"loss must be one of {LOSSES}, got {self.loss!r}")
        if self.epochs < 0:
            raise ValueError("epochs must be >= 0")
        if self.batch_size < 1:
            raise ValueError("batch size must be >= 1")
        if self.l1 < 0:
            raise ValueError("L1 weight must be nonnegative")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class EpochRecord:
    epoch: int
    loss: float
    delta: Optional[float]
    lr: float
    val_metric: float


def default_metric(dataset: Dataset) -> str:
    return "jaccard" if dataset.task == MULTICLASS else "macro_f1"


def predict(model, dataset: Dataset) -> np.ndarray:
    """Interpretable outputs (tanh range); the EO constraint layer is dropped."""
    return model.inference(dataset.bipolar())


def evaluate_model(model, dataset: Dataset, metric: Optional[str] = None) -> float:
    return metrics.score(metric or default_metric(dataset), predict(model, dataset), dataset.target_matrix())


def check_shapes(model, dataset: Dataset) -> None:
    if dataset.n_attributes != model.n_in:
        raise ValueError(f"dataset has {dataset.n_attributes} attributes but the model expects {model.n_in} inputs")
    if dataset.n_targets != model.n_out:
        raise ValueError(f"dataset has {dataset.n_targets} classes/labels but the model has {model.n_out} outputs")


def task_loss(logits: np.ndarray, targets: np.ndarray, loss: str) -> tuple[float, np.ndarray]:
    """Loss and dL/dlogits for one batch.

    ``targets`` is class indices for CE and a 0/1 matrix for BCE. BCE reads
    probabilities p = (tanh(z) + 1) / 2 = sigmoid(2z), the tanh output mapped
    onto [0, 1], and is evaluated in softplus form so no clamping is needed.
    """
    if loss == "ce":
        return cross_entropy_batch(logits, targets)
    z2 = 2.0 * np.asarray(logits, dtype=np.float64)
    if z2.shape != np.shape(targets):
        raise ValueError(f"BCE targets shape {np.shape(targets)} != outputs {z2.shape}")
    # -log sigmoid(a) = logaddexp(0, -a)
    per = targets * np.logaddexp(0.0, -z2) + (1.0 - targets) * np.logaddexp(0.0, z2)
    p = 0.5 * (np.tanh(logits) + 1.0)
    return float(per.mean()), 2.0 * (p - targets) / p.size


class _Optimizer:
    """Adam over a model's trainable parameters, honouring prune masks."""

    def __init__(self, model, cfg: OptimConfig):
        self.model = model
        self.cfg = cfg
        self.states = {name: AdamState.zeros_like(p) for name, (p, _) in self._params().items()}

    def _params(self):
        if self.model.kind == "mlp":
            return {k: (v, None) for k, v in self.model.params.items()}
        return {k: (layer.weights, layer.mask) for k, layer in self.model.trainable_layers().items()}

    def step(self, grads: dict, lr: float) -> None:
        for name, (param, mask) in self._params().items():
            adam_step(param, grads[name], self.states[name], self.cfg, mask=mask, lr=lr)


def train(model, train_set: Dataset, val_set: Optional[Dataset], cfg: TrainConfig):
    """Train ``model`` in place; returns (model, list of EpochRecord)."""
    if cfg.epochs < 1:
        raise ValueError("epochs must be >= 1")
    return _fit(model, train_set, val_set, cfg)


def _fit(model, train_set: Dataset, val_set: Optional[Dataset], cfg: TrainConfig):
    check_shapes(model, train_set)
    if val_set is not None:
        check_shapes(model, val_set)
    if cfg.loss == "ce" and train_set.task != MULTICLASS:
        raise ValueError("cross-entropy needs a multi-class dataset")
    x_all = train_set.bipolar()
    t_all = train_set.y if cfg.loss == "ce" else train_set.target_matrix().astype(np.float64)
    n = len(train_set)
    rng = np.random.default_rng(cfg.seed)
    opt = _Optimizer(model, cfg.optim)
    is_dnf = model.kind != "mlp"
    history = []
    for epoch in range(cfg.epochs):
        delta = None
        if is_dnf:
            delta = delta_at_epoch(cfg.delta, epoch, cfg.epochs)
            model.set_delta(delta)
        lr = lr_at_epoch(cfg.optim, epoch)
        order = rng.permutation(n) if cfg.shuffle else np.arange(n)
        total = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            logits, cache = model.forward_cache(x_all[idx])
            loss, grad = task_loss(logits, t_all[idx], cfg.loss)
            grads = model.backward(cache, grad)
            if is_dnf and cfg.l1 > 0:
                for name, layer in model.trainable_layers().items():
                    loss += cfg.l1 * float(np.abs(layer.weights).sum())
                    grads[name] = grads[name] + cfg.l1 * np.sign(layer.weights) * layer.mask
            if not np.isfinite(loss):
                raise FloatingPointError(f"non-finite loss at epoch {epoch}, batch starting {start}")
            opt.step(grads, lr)
            total += loss * len(idx)
        val = evaluate_model(model, val_set) if val_set is not None else float("nan")
        rec = EpochRecord(epoch, total / max(n, 1), delta, lr, val)
        history.append(rec)
        log.debug("epoch %d loss %.5f delta %s val %.4f", epoch, rec.loss, delta, val)
    return model, history


def write_history_csv(history: list[EpochRecord], path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "loss", "delta", "lr", "val_metric"])
        for r in history:
            w.writerow([r.epoch, repr(r.loss), "" if r.delta is None else repr(r.delta), repr(r.lr), repr(r.val_metric)])
