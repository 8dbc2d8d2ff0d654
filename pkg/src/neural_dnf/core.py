"""Dense numerics shared by every model: activations, losses, Adam and the
learning-rate schedule, plus a central-difference gradient used by tests.

Matrices are plain float64 numpy arrays.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

BCE_CLAMP = 1e-7


@dataclass
class OptimConfig:
    lr: float = 0.001
    weight_decay: float = 0.00004
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    lr_step_interval: int = 100
    lr_decay: float = 0.1

    def __post_init__(self):
        if not self.lr > 0:
            raise ValueError(f"learning rate must be positive, got {self.lr}")
        if not 0 < self.lr_decay <= 1:
            raise ValueError(f"lr decay factor must be in (0, 1], got {self.lr_decay}")
        if self.weight_decay < 0:
            raise ValueError("weight decay must be nonnegative")
        if self.lr_step_interval < 1:
            raise ValueError("lr step interval must be >= 1")


@dataclass
class AdamState:
    m: np.ndarray
    v: np.ndarray
    t: int = 0

    @classmethod
    def zeros_like(cls, params: np.ndarray) -> "AdamState":
        return cls(np.zeros_like(params, dtype=np.float64), np.zeros_like(params, dtype=np.float64))


def softmax(logits) -> np.ndarray:
    """Softmax along the last axis, max-subtracted."""
    z = np.asarray(logits, dtype=np.float64)
    if z.size == 0 or z.shape[-1] == 0:
        raise ValueError("softmax of an empty vector")
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(logits) -> np.ndarray:
    z = np.asarray(logits, dtype=np.float64)
    if z.size == 0 or z.shape[-1] == 0:
        raise ValueError("log_softmax of an empty vector")
    z = z - z.max(axis=-1, keepdims=True)
    return z - np.log(np.exp(z).sum(axis=-1, keepdims=True))


def cross_entropy(logits, target: int) -> float:
    """-log softmax(logits)[target] for a single logit vector."""
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 1:
        raise ValueError("cross_entropy expects a single logit vector")
    if not 0 <= target < z.shape[0]:
        raise ValueError(f"target {target} out of range for {z.shape[0]} logits")
    return float(-log_softmax(z)[target])


def cross_entropy_batch(logits: np.ndarray, targets: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean cross-entropy over a batch and its gradient w.r.t. the logits."""
    logits = np.asarray(logits, dtype=np.float64)
    targets = np.asarray(targets, dtype=np.int64)
    n, k = logits.shape
    if targets.shape != (n,):
        raise ValueError("targets must be one class index per row")
    if targets.min(initial=0) < 0 or targets.max(initial=0) >= k:
        raise ValueError("target class index out of range")
    rows = np.arange(n)
    loss = -log_softmax(logits)[rows, targets].mean()
    grad = softmax(logits)
    grad[rows, targets] -= 1.0
    return float(loss), grad / n


def binary_cross_entropy(predictions, targets) -> float:
    p = np.asarray(predictions, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if p.shape != t.shape:
        raise ValueError(f"length mismatch: {p.shape} vs {t.shape}")
    p = np.clip(p, BCE_CLAMP, 1 - BCE_CLAMP)
    return float(np.mean(-(t * np.log(p) + (1 - t) * np.log(1 - p))))


def binary_cross_entropy_grad(predictions, targets) -> np.ndarray:
    """d(mean BCE)/dp, using the same clamped probabilities as the loss."""
    p = np.clip(np.asarray(predictions, dtype=np.float64), BCE_CLAMP, 1 - BCE_CLAMP)
    t = np.asarray(targets, dtype=np.float64)
    return (p - t) / (p * (1 - p)) / p.size


def adam_step(
    params: np.ndarray,
    grads: np.ndarray,
    state: AdamState,
    cfg: OptimConfig,
    mask: Optional[np.ndarray] = None,
    lr: Optional[float] = None,
) -> np.ndarray:
    """One Adam update, in place on ``params`` and ``state``; returns params.

    Weight decay is folded into the gradient (L2-coupled Adam). Entries where
    ``mask`` is 0 keep their value and their moment estimates.
    """
    if grads.shape != params.shape or state.m.shape != params.shape:
        raise ValueError(f"shape mismatch: params {params.shape}, grads {grads.shape}")
    if mask is not None and mask.shape != params.shape:
        raise ValueError(f"mask shape {mask.shape} does not match params {params.shape}")
    lr = cfg.lr if lr is None else lr
    state.t += 1
    g = grads + cfg.weight_decay * params
    m = cfg.beta1 * state.m + (1 - cfg.beta1) * g
    v = cfg.beta2 * state.v + (1 - cfg.beta2) * g * g
    m_hat = m / (1 - cfg.beta1 ** state.t)
    v_hat = v / (1 - cfg.beta2 ** state.t)
    update = lr * m_hat / (np.sqrt(v_hat) + cfg.eps)
    if mask is None:
        state.m, state.v = m, v
        params -= update
    else:
        keep = np.asarray(mask) != 0
        state.m = np.where(keep, m, state.m)
        state.v = np.where(keep, v, state.v)
        params[keep] -= update[keep]
    return params


def lr_at_epoch(cfg: OptimConfig, epoch: int) -> float:
    return cfg.lr * cfg.lr_decay ** (epoch // cfg.lr_step_interval)


def finite_diff_gradient(f: Callable[[np.ndarray], float], at: np.ndarray, h: float = 1e-5) -> np.ndarray:
    x = np.array(at, dtype=np.float64)
    grad = np.zeros_like(x)
    flat = x.reshape(-1)
    out = grad.reshape(-1)
    for i in range(flat.size):
        orig = flat[i]
        flat[i] = orig + h
        fp = f(x)
        flat[i] = orig - h
        fm = f(x)
        flat[i] = orig
        if not (np.isfinite(fp) and np.isfinite(fm)):
            raise FloatingPointError(f"non-finite function value near entry {i}")
        out[i] = (fp - fm) / (2 * h)
    return grad
