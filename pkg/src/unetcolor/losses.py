"""Joint training objective: chroma MSE plus weighted softmax cross-entropy.

The class-loss weight selects the training variant: 1.0 for plain joint
training, 0.01 for the divided classification error, 0.0 when the graph has no
classifier. Loss values are accumulated in float64 regardless of model dtype.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class LossBreakdown:
    mse: float
    ce: float
    total: float


def mse_loss(pred: np.ndarray, target: np.ndarray) -> float:
    """Mean squared error over every batch x channel x pixel element."""
    pred, target = np.asarray(pred), np.asarray(target)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    d = pred.astype(np.float64) - target.astype(np.float64)
    return float(np.mean(d * d))


def mse_loss_grad(pred: np.ndarray, target: np.ndarray):
    """(loss, d loss / d pred)."""
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    d = pred.astype(np.float64) - target.astype(np.float64)
    loss = float(np.mean(d * d))
    return loss, (2.0 / d.size) * d


def cross_entropy(probs: np.ndarray, labels: np.ndarray) -> float:
    """Mean negative log-probability of the true class, from probabilities.

    Rows must lie on the simplex; use :func:`cross_entropy_from_logits` inside
    training loops, which is the numerically stable route.
    """
    probs = np.asarray(probs, dtype=np.float64)
    labels = np.asarray(labels)
    if probs.ndim != 2 or labels.shape != (probs.shape[0],):
        raise ValueError(f"expected (N, K) probs and (N,) labels, got {probs.shape}, {labels.shape}")
    if np.any(labels < 0) or np.any(labels >= probs.shape[1]):
        raise ValueError(f"label out of range for {probs.shape[1]} classes")
    if not np.allclose(probs.sum(axis=1), 1.0, atol=1e-5):
        raise ValueError("probability rows do not sum to 1")
    picked = probs[np.arange(probs.shape[0]), labels]
    return float(np.mean(-np.log(np.maximum(picked, 1e-300))))


def cross_entropy_from_logits(logits: np.ndarray, labels: np.ndarray):
    """(loss, d loss / d logits), computed via a shifted log-sum-exp."""
    logits = np.asarray(logits)
    labels = np.asarray(labels)
    n, k = logits.shape
    if labels.shape != (n,):
        raise ValueError(f"expected (N,) labels, got {labels.shape}")
    if np.any(labels < 0) or np.any(labels >= k):
        raise ValueError(f"label out of range for {k} classes")
    z = logits.astype(np.float64)
    z = z - z.max(axis=1, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=1))
    idx = np.arange(n)
    loss = float(np.mean(lse - z[idx, labels]))
    softmax = np.exp(z - lse[:, None])
    dlogits = softmax
    dlogits[idx, labels] -= 1.0
    dlogits /= n
    return loss, dlogits


def joint_loss(ab_pred, ab_target, class_probs, labels, class_weight: float) -> LossBreakdown:
    """total = mse + alpha * ce; ce is 0 (and ignored) when alpha is 0."""
    mse = mse_loss(ab_pred, ab_target)
    ce = 0.0 if class_weight == 0.0 else cross_entropy(class_probs, labels)
    return LossBreakdown(mse=mse, ce=ce, total=mse + class_weight * ce)
