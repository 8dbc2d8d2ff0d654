"""Semi-symbolic layer: tanh(W x + beta) with a bias computed from the
weights themselves, so a row behaves like AND (delta > 0) or OR (delta < 0)
over its (possibly negated) inputs.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

CONJUNCTIVE = "conjunctive"
DISJUNCTIVE = "disjunctive"
LAYER_KINDS = (CONJUNCTIVE, DISJUNCTIVE)


@dataclass
class DeltaSchedule:
    """Staircase ramp of the delta magnitude.

    ``interval=None`` means ``total_epochs // 10`` (at least 1).
    """

    initial: float = 0.1
    increment: float = 0.1
    interval: Optional[int] = None
    final: float = 1.0

    def resolved_interval(self, total_epochs: int) -> int:
        if self.interval is not None:
            return max(1, int(self.interval))
        return max(1, total_epochs // 10)


def delta_at_epoch(schedule: DeltaSchedule, epoch: int, total_epochs: int = 100) -> float:
    step = epoch // schedule.resolved_interval(total_epochs)
    # rounding keeps 0.1 + 9 * 0.1 == 1.0
    return min(schedule.final, round(schedule.initial + schedule.increment * step, 12))


def logical_bias(row, delta: float) -> float:
    w = np.abs(np.asarray(row, dtype=np.float64))
    if w.size == 0:
        raise ValueError("logical bias of an empty weight row")
    return float(delta * (w.max() - w.sum()))


def init_weights(rng: np.random.Generator, n_out: int, n_in: int) -> np.ndarray:
    bound = 1.0 / math.sqrt(n_in)
    return rng.uniform(-bound, bound, size=(n_out, n_in))


class SemiSymbolicLayer:
    def __init__(
        self,
        weights: np.ndarray,
        kind: str,
        delta: float = 0.1,
        trainable: bool = True,
        mask: Optional[np.ndarray] = None,
    ):
        if kind not in LAYER_KINDS:
            raise ValueError(f"unknown layer kind {kind!r}")
        self.weights = np.array(weights, dtype=np.float64)
        if self.weights.ndim != 2 or 0 in self.weights.shape:
            raise ValueError(f"weights must be a nonempty matrix, got shape {self.weights.shape}")
        self.kind = kind
        self.delta = float(delta)
        self.trainable = trainable
        self.mask = np.ones_like(self.weights) if mask is None else np.array(mask, dtype=np.float64)
        if self.mask.shape != self.weights.shape:
            raise ValueError("mask shape does not match weights")

    @classmethod
    def random(cls, n_in: int, n_out: int, kind: str, rng: np.random.Generator, delta: float = 0.1):
        if n_in < 1 or n_out < 1:
            raise ValueError(f"layer dimensions must be >= 1, got {n_out}x{n_in}")
        return cls(init_weights(rng, n_out, n_in), kind, delta)

    @property
    def n_in(self) -> int:
        return self.weights.shape[1]

    @property
    def n_out(self) -> int:
        return self.weights.shape[0]

    @property
    def signed_delta(self) -> float:
        return self.delta if self.kind == CONJUNCTIVE else -self.delta

    def copy(self) -> "SemiSymbolicLayer":
        return SemiSymbolicLayer(self.weights.copy(), self.kind, self.delta, self.trainable, self.mask.copy())

    def bias(self) -> np.ndarray:
        a = np.abs(self.weights)
        return self.signed_delta * (a.max(axis=1) - a.sum(axis=1))

    def _check_input(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape[-1] != self.n_in:
            raise ValueError(f"input has {x.shape[-1]} features, layer expects {self.n_in}")
        return x

    def preactivation(self, x) -> np.ndarray:
        """W x + beta, before tanh."""
        x = self._check_input(x)
        return x @ self.weights.T + self.bias()

    def forward(self, x) -> np.ndarray:
        """x: (n_in,) or (batch, n_in); returns matching (n_out,) / (batch, n_out)."""
        return np.tanh(self.preactivation(x))

    def bias_grad(self) -> np.ndarray:
        """d beta_j / d W_ji, first-index argmax, sign(0) = 0."""
        s = np.sign(self.weights)
        top = np.zeros_like(s)
        rows = np.arange(self.n_out)
        arg = np.argmax(np.abs(self.weights), axis=1)
        top[rows, arg] = s[rows, arg]
        return self.signed_delta * (top - s)

    def backward(self, x, grad_y, y: Optional[np.ndarray] = None) -> tuple[np.ndarray, np.ndarray]:
        """Gradients (dL/dW, dL/dx) given upstream dL/dy.

        Pass ``y`` from the forward call to skip recomputing it.
        """
        x = self._check_input(x)
        grad_y = np.asarray(grad_y, dtype=np.float64)
        if y is None:
            y = self.forward(x)
        if grad_y.shape != y.shape:
            raise ValueError(f"upstream gradient shape {grad_y.shape} != output shape {y.shape}")
        return self.backward_preactivation(x, grad_y * (1.0 - y * y))

    def backward_preactivation(self, x, gz) -> tuple[np.ndarray, np.ndarray]:
        """Same as ``backward`` but from dL/d(preactivation)."""
        x = self._check_input(x)
        gz = np.asarray(gz, dtype=np.float64)
        x2 = np.atleast_2d(x)
        gz2 = np.atleast_2d(gz)
        dW = gz2.T @ x2 + gz2.sum(axis=0)[:, None] * self.bias_grad()
        dW *= self.mask
        dx = gz @ self.weights
        return dW, dx

    def apply_mask(self) -> None:
        self.weights *= self.mask
