"""From-scratch sequence-model building blocks on numpy/numba kernels."""

from .backend import backend_name, kernels, numba_available
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .gradcheck import GradCheckResult, grad_check, relative_error
from .layers import GRU, Conv2d, Layer, Linear, ReLU, Sigmoid, Softmax
from .losses import CLAMP_EPS, bce_loss, nll_loss
from .optim import Adam

__all__ = [
    "Adam",
    "CLAMP_EPS",
    "CheckpointError",
    "Conv2d",
    "GRU",
    "GradCheckResult",
    "Layer",
    "Linear",
    "ReLU",
    "Sigmoid",
    "Softmax",
    "backend_name",
    "bce_loss",
    "grad_check",
    "kernels",
    "load_checkpoint",
    "nll_loss",
    "numba_available",
    "relative_error",
    "save_checkpoint",
]
