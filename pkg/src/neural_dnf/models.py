"""Neural DNF models and the MLP baseline.

All models take bipolar inputs (false = -1, true = +1) as a (batch, n_in)
array. ``forward_cache`` returns the output logits (the last layer before
its tanh) that the losses consume, and ``backward`` maps dL/dlogits to
per-parameter gradients keyed by name. ``inference`` gives the tanh-range
outputs that are read as true when > 0.
"""
from __future__ import annotations

from typing import Optional

import numpy as np

from .semi_symbolic import CONJUNCTIVE, DISJUNCTIVE, SemiSymbolicLayer, init_weights

SATURATION = 6.0


class NeuralDnfModel:
    """Conjunctive semi-symbolic layer feeding a disjunctive one."""

    kind = "vanilla"

    def __init__(self, conj: SemiSymbolicLayer, disj: SemiSymbolicLayer):
        if conj.kind != CONJUNCTIVE or disj.kind != DISJUNCTIVE:
            raise ValueError("expected a conjunctive layer followed by a disjunctive layer")
        if disj.n_in != conj.n_out:
            raise ValueError(f"layer sizes do not chain: {conj.n_out} conjunctions vs {disj.n_in} disjunct inputs")
        self.conj = conj
        self.disj = disj

    @property
    def n_in(self) -> int:
        return self.conj.n_in

    @property
    def n_conj(self) -> int:
        return self.conj.n_out

    @property
    def n_out(self) -> int:
        return self.disj.n_out

    @property
    def delta(self) -> float:
        return self.conj.delta

    def set_delta(self, delta: float) -> None:
        self.conj.delta = delta
        self.disj.delta = delta

    def trainable_layers(self) -> dict[str, SemiSymbolicLayer]:
        return {name: layer for name, layer in (("conj", self.conj), ("disj", self.disj)) if layer.trainable}

    def copy(self) -> "NeuralDnfModel":
        return NeuralDnfModel(self.conj.copy(), self.disj.copy())

    def plain(self) -> "NeuralDnfModel":
        return self

    def forward(self, x) -> np.ndarray:
        return self.disj.forward(self.conj.forward(x))

    def forward_cache(self, x):
        h = self.conj.forward(x)
        return self.disj.preactivation(h), (x, h)

    def backward(self, cache, grad_logits) -> dict[str, np.ndarray]:
        x, h = cache
        d_disj, dh = self.disj.backward_preactivation(h, grad_logits)
        d_conj, _ = self.conj.backward(x, dh, h)
        return {"conj": d_conj, "disj": d_disj}

    def inference(self, x) -> np.ndarray:
        """Outputs used for interpretation (tanh range)."""
        return self.forward(x)


def constraint_layer(n_classes: int) -> SemiSymbolicLayer:
    w = np.full((n_classes, n_classes), -SATURATION)
    np.fill_diagonal(w, 0.0)
    return SemiSymbolicLayer(w, CONJUNCTIVE, delta=1.0, trainable=False)


class NeuralDnfEoModel:
    """Neural DNF with a frozen exactly-one constraint layer on top.

    The constraint layer encodes class_i <- not class_j for every j != i.
    """

    kind = "eo"

    def __init__(self, base: NeuralDnfModel, constraint: Optional[SemiSymbolicLayer] = None):
        self.base = base
        self.constraint = constraint_layer(base.n_out) if constraint is None else constraint
        if self.constraint.n_in != base.n_out or self.constraint.n_out != base.n_out:
            raise ValueError("constraint layer must be n_classes x n_classes")
        self.constraint.trainable = False

    n_in = property(lambda self: self.base.n_in)
    n_conj = property(lambda self: self.base.n_conj)
    n_out = property(lambda self: self.base.n_out)
    delta = property(lambda self: self.base.delta)

    def set_delta(self, delta: float) -> None:
        # the constraint layer keeps delta = 1
        self.base.set_delta(delta)

    def trainable_layers(self) -> dict[str, SemiSymbolicLayer]:
        return self.base.trainable_layers()

    def copy(self) -> "NeuralDnfEoModel":
        return NeuralDnfEoModel(self.base.copy(), self.constraint.copy())

    def plain(self) -> NeuralDnfModel:
        return self.base

    def forward(self, x) -> tuple[np.ndarray, np.ndarray]:
        y1 = self.base.forward(x)
        return y1, self.constraint.forward(y1)

    def forward_cache(self, x):
        z1, base_cache = self.base.forward_cache(x)
        y1 = np.tanh(z1)
        return self.constraint.preactivation(y1), (base_cache, y1)

    def backward(self, cache, grad_logits) -> dict[str, np.ndarray]:
        base_cache, y1 = cache
        _, dy1 = self.constraint.backward_preactivation(y1, grad_logits)
        return self.base.backward(base_cache, dy1 * (1.0 - y1 * y1))

    def inference(self, x) -> np.ndarray:
        # the constraint layer is dropped at inference time
        return self.base.forward(x)


class MlpBaseline:
    """dense -> tanh -> dense with ordinary additive biases."""

    kind = "mlp"

    def __init__(self, w1: np.ndarray, b1: np.ndarray, w2: np.ndarray, b2: np.ndarray):
        self.params = {
            "w1": np.array(w1, dtype=np.float64),
            "b1": np.array(b1, dtype=np.float64),
            "w2": np.array(w2, dtype=np.float64),
            "b2": np.array(b2, dtype=np.float64),
        }
        if self.params["w2"].shape[1] != self.params["w1"].shape[0]:
            raise ValueError("MLP layer sizes do not chain")

    n_in = property(lambda self: self.params["w1"].shape[1])
    n_conj = property(lambda self: self.params["w1"].shape[0])
    n_out = property(lambda self: self.params["w2"].shape[0])

    def copy(self) -> "MlpBaseline":
        return MlpBaseline(**{k: v.copy() for k, v in self.params.items()})

    def _check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.n_in:
            raise ValueError(f"input has {x.shape[-1]} features, model expects {self.n_in}")
        return x

    def forward(self, x) -> np.ndarray:
        """Raw logits."""
        p = self.params
        h = np.tanh(self._check(x) @ p["w1"].T + p["b1"])
        return h @ p["w2"].T + p["b2"]

    def forward_cache(self, x):
        p = self.params
        x = self._check(x)
        h = np.tanh(x @ p["w1"].T + p["b1"])
        return h @ p["w2"].T + p["b2"], (x, h)

    def backward(self, cache, grad_y) -> dict[str, np.ndarray]:
        x, h = cache
        p = self.params
        x2, h2, g2 = np.atleast_2d(x), np.atleast_2d(h), np.atleast_2d(grad_y)
        dh = g2 @ p["w2"] * (1 - h2 * h2)
        return {
            "w2": g2.T @ h2,
            "b2": g2.sum(axis=0),
            "w1": dh.T @ x2,
            "b1": dh.sum(axis=0),
        }

    def inference(self, x) -> np.ndarray:
        """tanh-squashed logits, for the 0-threshold interpretation probe."""
        return np.tanh(self.forward(x))


def _check_dims(*dims: int) -> None:
    if any(int(d) < 1 for d in dims):
        raise ValueError(f"all model dimensions must be >= 1, got {dims}")


def init_vanilla(n_in: int, n_conj: int, n_out: int, seed: int) -> NeuralDnfModel:
    _check_dims(n_in, n_conj, n_out)
    rng = np.random.default_rng(seed)
    conj = SemiSymbolicLayer(init_weights(rng, n_conj, n_in), CONJUNCTIVE, 0.1)
    disj = SemiSymbolicLayer(init_weights(rng, n_out, n_conj), DISJUNCTIVE, 0.1)
    return NeuralDnfModel(conj, disj)


def init_eo(n_in: int, n_conj: int, n_classes: int, seed: int) -> NeuralDnfEoModel:
    if n_classes < 2:
        raise ValueError(f"exactly-one model needs at least 2 classes, got {n_classes}")
    return NeuralDnfEoModel(init_vanilla(n_in, n_conj, n_classes, seed))


def init_mlp(n_in: int, n_hidden: int, n_out: int, seed: int) -> MlpBaseline:
    # same draw order as init_vanilla so both start from identical weights
    _check_dims(n_in, n_hidden, n_out)
    rng = np.random.default_rng(seed)
    w1 = init_weights(rng, n_hidden, n_in)
    w2 = init_weights(rng, n_out, n_hidden)
    return MlpBaseline(w1, np.zeros(n_hidden), w2, np.zeros(n_out))


def init_model(kind: str, n_in: int, n_conj: int, n_out: int, seed: int):
    if kind == "vanilla":
        return init_vanilla(n_in, n_conj, n_out, seed)
    if kind == "eo":
        return init_eo(n_in, n_conj, n_out, seed)
    if kind == "mlp":
        return init_mlp(n_in, n_conj, n_out, seed)
    raise ValueError(f"unknown model kind {kind!r}")


def interpret_bipolar(y, threshold: float = 0.0) -> set[int]:
    return {i for i, v in enumerate(np.asarray(y).reshape(-1)) if v > threshold}


def predict_argmax(y) -> int:
    y = np.asarray(y)
    if y.size == 0:
        raise ValueError("argmax of an empty vector")
    return int(np.argmax(y))  # numpy returns the first maximal index
