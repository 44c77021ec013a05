"""Masked losses over padded step grids.

Both losses average over valid steps only: the mask marks real steps with 1
and padding with 0, and the divisor is the mask total. Probabilities are
clamped to [1e-7, 1 - 1e-7] before the log; the clamp is flat, so clamped
entries contribute zero gradient.
"""

from __future__ import annotations

import numpy as np

CLAMP_EPS = 1e-7


def bce_loss(p: np.ndarray, target: np.ndarray,
             mask: np.ndarray) -> tuple[float, np.ndarray]:
    """Binary cross entropy on probabilities. Returns (loss, dL/dp)."""
    denom = float(mask.sum())
    if denom == 0.0:
        return 0.0, np.zeros_like(p)
    ph = np.clip(p, CLAMP_EPS, 1.0 - CLAMP_EPS)
    per = -(target * np.log(ph) + (1.0 - target) * np.log(1.0 - ph))
    loss = float((per * mask).sum() / denom)
    inside = (p > CLAMP_EPS) & (p < 1.0 - CLAMP_EPS)
    dp = (ph - target) / (ph * (1.0 - ph)) * mask * inside / denom
    return loss, dp


def nll_loss(dist: np.ndarray, labels: np.ndarray,
             mask: np.ndarray) -> tuple[float, np.ndarray]:
    """Negative log likelihood on a (..., K) distribution with int labels.

    Returns (loss, dL/ddist); only the label entries get nonzero gradient.
    """
    denom = float(mask.sum())
    ddist = np.zeros_like(dist)
    if denom == 0.0:
        return 0.0, ddist
    picked = np.take_along_axis(dist, labels[..., None], axis=-1)[..., 0]
    ph = np.maximum(picked, CLAMP_EPS)
    loss = float((-np.log(ph) * mask).sum() / denom)
    dpicked = -mask / (ph * denom) * (picked > CLAMP_EPS)
    np.put_along_axis(ddist, labels[..., None], dpicked[..., None], axis=-1)
    return loss, ddist
