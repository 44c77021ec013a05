"""Finite-difference gradient verification.

Analytic gradients are compared against central differences of the loss:
num = (L(theta + h) - L(theta - h)) / (2h), with the relative error
|a - n| / max(|a|, |n|, 1e-6). Large tensors can be spot-checked on a random
subset of coordinates to keep runtime bounded.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

DEFAULT_H = 1e-5
REL_FLOOR = 1e-6


def relative_error(analytic: float, numeric: float) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), REL_FLOOR)


@dataclass
class GradCheckResult:
    max_rel_err: float
    n_checked: int
    worst_param: str


def grad_check(
    loss_fn: Callable[[], float],
    param_items,
    h: float = DEFAULT_H,
    max_coords_per_tensor: int | None = None,
    rng: np.random.Generator | None = None,
) -> GradCheckResult:
    """Check analytic grads in param_items against finite differences.

    param_items: (name, param, grad) triples where grad already holds the
    analytic gradient of the SAME loss that loss_fn recomputes. loss_fn must
    be a pure forward evaluation: no gradient side effects, deterministic.
    """
    worst = 0.0
    worst_name = ""
    checked = 0
    for name, param, grad in param_items:
        flat_p = param.reshape(-1)
        flat_g = grad.reshape(-1)
        n = flat_p.shape[0]
        if max_coords_per_tensor is not None and n > max_coords_per_tensor:
            if rng is None:
                raise ValueError("sampling coordinates requires an rng")
            coords = rng.choice(n, size=max_coords_per_tensor, replace=False)
        else:
            coords = np.arange(n)
        for i in coords:
            orig = flat_p[i]
            flat_p[i] = orig + h
            lp = loss_fn()
            flat_p[i] = orig - h
            lm = loss_fn()
            flat_p[i] = orig
            numeric = (lp - lm) / (2.0 * h)
            err = relative_error(float(flat_g[i]), numeric)
            checked += 1
            if err > worst:
                worst = err
                worst_name = name
    return GradCheckResult(worst, checked, worst_name)
