"""Adam and Adadelta, updating parameter arrays in place.

Only the learning rate varies across the published training configurations;
the remaining hyperparameters stay at their canonical defaults (Adam beta1
0.9, beta2 0.999, eps 1e-8 with bias correction; Adadelta rho 0.9, eps 1e-6
with the accumulated update scaled by lr).
"""

from __future__ import annotations

import numpy as np


class Adam:
    def __init__(self, params: dict, lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        if lr <= 0:
            raise ValueError(f"lr must be positive, got {lr}")
        self.params = params
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.step_count = 0
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, grads: dict) -> None:
        self.step_count += 1
        t = self.step_count
        bc1 = 1.0 - self.beta1 ** t
        bc2 = 1.0 - self.beta2 ** t
        for name, p in self.params.items():
            g = grads[name]
            m = self.m[name]
            v = self.v[name]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / bc1) / (np.sqrt(v / bc2) + self.eps)


class Adadelta:
    def __init__(self, params: dict, lr: float, rho: float = 0.9, eps: float = 1e-6):
        if lr <= 0:
            raise ValueError(f"lr must be positive, got {lr}")
        self.params = params
        self.lr, self.rho, self.eps = lr, rho, eps
        self.sq_grad = {k: np.zeros_like(v) for k, v in params.items()}
        self.sq_update = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, grads: dict) -> None:
        for name, p in self.params.items():
            g = grads[name]
            eg = self.sq_grad[name]
            eu = self.sq_update[name]
            eg *= self.rho
            eg += (1.0 - self.rho) * g * g
            delta = np.sqrt(eu + self.eps) / np.sqrt(eg + self.eps) * g
            eu *= self.rho
            eu += (1.0 - self.rho) * delta * delta
            p -= self.lr * delta


def make_optimizer(kind: str, params: dict, lr: float):
    if kind == "adam":
        return Adam(params, lr)
    if kind == "adadelta":
        return Adadelta(params, lr)
    raise ValueError(f"unknown optimizer {kind!r} (expected 'adam' or 'adadelta')")
