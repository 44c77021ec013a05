"""Adam optimizer over explicit (param, grad) array pairs."""

from __future__ import annotations

import numpy as np


class Adam:
    """Standard Adam with bias correction.

    The update divides by (sqrt(v_hat) + eps): the epsilon sits outside the
    square root, so a unit first gradient moves a parameter by exactly
    -lr / (1 + eps).
    """

    def __init__(self, param_items, lr: float = 1e-3,
                 beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        # param_items: iterable of (name, param, grad) array triples.
        self.items = list(param_items)
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for _, p, _ in self.items]
        self.v = [np.zeros_like(p) for _, p, _ in self.items]

    def step(self) -> None:
        self.t += 1
        b1c = 1.0 - self.beta1**self.t
        b2c = 1.0 - self.beta2**self.t
        for i, (_name, p, g) in enumerate(self.items):
            m = self.m[i]
            v = self.v[i]
            m *= self.beta1
            m += (1.0 - self.beta1) * g
            v *= self.beta2
            v += (1.0 - self.beta2) * g * g
            p -= self.lr * (m / b1c) / (np.sqrt(v / b2c) + self.eps)

    def zero_grads(self) -> None:
        for _name, _p, g in self.items:
            g[...] = 0.0
