"""Baseline sequence models over observation features.

Two recurrent baselines share a trunk shape: two dense layers into a stacked
pair of GRUs, then a task head. The win-probability model ends in a single
sigmoid unit; the build-order model ends in a softmax over the action labels.
The combined model adds a convolutional path over the spatial tensor and
fuses it with the global vector before a single GRU.

Width scaling multiplies every hidden size by one factor, rounding to the
nearest integer with a floor of 1, so tests can run the same topology at a
fraction of the full parameter count.
"""

from __future__ import annotations

import numpy as np

from .features import GLOBAL_DIM, N_SPATIAL_CHANNELS
from .nn.layers import GRU, Conv2d, Linear, ReLU, Sigmoid, Softmax
from .trace_model import MAP_SIZE

TRUNK_WIDTHS = (1024, 2048, 2048, 512)
COMBINED_WIDTHS = (16, 32, 128, 512, 128)  # convA, convB, global, fused, gru


def scaled(base: int, scale: float) -> int:
    return max(1, round(base * scale))


def _rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed]))


class _SequenceModel:
    """Shared trunk: Linear-ReLU-Linear-ReLU-GRU-GRU-head."""

    def __init__(self, head_dim: int, width_scale: float, seed: int):
        rng = _rng(seed)
        a, b, c, d = (scaled(w, width_scale) for w in TRUNK_WIDTHS)
        self.width_scale = width_scale
        self.fc_a = Linear(GLOBAL_DIM, a, rng)
        self.act_a = ReLU()
        self.fc_b = Linear(a, b, rng)
        self.act_b = ReLU()
        self.gru_c = GRU(b, c, rng)
        self.gru_d = GRU(c, d, rng)
        self.head = Linear(d, head_dim, rng)
        self._layers = {
            "fc_a": self.fc_a,
            "fc_b": self.fc_b,
            "gru_c": self.gru_c,
            "gru_d": self.gru_d,
            "head": self.head,
        }

    def initial_state(self, batch: int):
        return (self.gru_c.initial_state(batch), self.gru_d.initial_state(batch))

    def forward(self, x: np.ndarray, state=None):
        """x: (T, B, GLOBAL_DIM) -> (out (T, B, head_dim), next_state)."""
        s_c, s_d = state if state is not None else (None, None)
        h = self.act_a.forward(self.fc_a.forward(x))
        h = self.act_b.forward(self.fc_b.forward(h))
        h = self.gru_c.forward(h, s_c)
        h = self.gru_d.forward(h, s_d)
        out = self.out_act.forward(self.head.forward(h))
        return out, (self.gru_c.h_last.copy(), self.gru_d.h_last.copy())

    def backward(self, dout: np.ndarray) -> None:
        dy = self.head.backward(self.out_act.backward(dout))
        dy = self.gru_c.backward(self.gru_d.backward(dy))
        dy = self.fc_b.backward(self.act_b.backward(dy))
        self.fc_a.backward(self.act_a.backward(dy))

    def param_items(self):
        for lname, layer in self._layers.items():
            for pname, p, g in layer.param_items():
                yield f"{lname}.{pname}", p, g

    def zero_grads(self) -> None:
        for layer in self._layers.values():
            layer.zero_grads()

    def to_arrays(self) -> dict[str, np.ndarray]:
        return {name: p for name, p, _g in self.param_items()}

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        for name, p, _g in self.param_items():
            src = arrays[name]
            if src.shape != p.shape:
                raise ValueError(f"{name}: shape {src.shape} != {p.shape}")
            p[...] = src.astype(np.float64)


class WinProbModel(_SequenceModel):
    """Per-step win probability from the global feature sequence."""

    task = "win"

    def __init__(self, width_scale: float = 1.0, seed: int = 0):
        super().__init__(1, width_scale, seed)
        self.out_act = Sigmoid()

    def spec_dict(self) -> dict:
        return {"task": self.task, "width_scale": self.width_scale}


class BuildOrderModel(_SequenceModel):
    """Per-step distribution over the next high-level action label."""

    task = "build"

    def __init__(self, n_labels: int, width_scale: float = 1.0, seed: int = 0):
        super().__init__(n_labels, width_scale, seed)
        self.n_labels = n_labels
        self.out_act = Softmax()

    def spec_dict(self) -> dict:
        return {"task": self.task, "width_scale": self.width_scale,
                "n_labels": self.n_labels}


class CombinedModel:
    """Global-vector and spatial-tensor fusion model.

    The spatial path applies two stride-2 convolutions and flattens; the
    global path is one dense layer. Their concatenation feeds a dense layer,
    a GRU, and the task head (sigmoid for "win", softmax otherwise).
    """

    task = "combined"

    def __init__(self, n_out: int = 1, width_scale: float = 1.0, seed: int = 0):
        rng = _rng(seed)
        ca, cb, cg, cf, ch = (scaled(w, width_scale) for w in COMBINED_WIDTHS)
        self.width_scale = width_scale
        self.n_out = n_out
        self.conv_a = Conv2d(N_SPATIAL_CHANNELS, ca, rng)
        self.act_ca = ReLU()
        self.conv_b = Conv2d(ca, cb, rng)
        self.act_cb = ReLU()
        side = MAP_SIZE // 4  # two stride-2 halvings
        self.flat_dim = cb * side * side
        self.fc_g = Linear(GLOBAL_DIM, cg, rng)
        self.act_g = ReLU()
        self.fc_f = Linear(self.flat_dim + cg, cf, rng)
        self.act_f = ReLU()
        self.gru = GRU(cf, ch, rng)
        self.head = Linear(ch, n_out, rng)
        self.out_act = Sigmoid() if n_out == 1 else Softmax()
        self._layers = {
            "conv_a": self.conv_a,
            "conv_b": self.conv_b,
            "fc_g": self.fc_g,
            "fc_f": self.fc_f,
            "gru": self.gru,
            "head": self.head,
        }

    def initial_state(self, batch: int):
        return self.gru.initial_state(batch)

    def forward(self, x_global: np.ndarray, x_spatial: np.ndarray, state=None):
        """x_global: (T, B, GLOBAL_DIM); x_spatial: (T, B, C, S, S)."""
        T, B = x_global.shape[:2]
        imgs = x_spatial.reshape(T * B, *x_spatial.shape[2:])
        s = self.act_ca.forward(self.conv_a.forward(imgs))
        s = self.act_cb.forward(self.conv_b.forward(s))
        self._conv_out_shape = s.shape
        flat = s.reshape(T, B, self.flat_dim)
        g = self.act_g.forward(self.fc_g.forward(x_global))
        fused = np.concatenate([flat, g], axis=2)
        h = self.act_f.forward(self.fc_f.forward(fused))
        h = self.gru.forward(h, state)
        out = self.out_act.forward(self.head.forward(h))
        return out, self.gru.h_last.copy()

    def backward(self, dout: np.ndarray) -> None:
        dy = self.head.backward(self.out_act.backward(dout))
        dy = self.gru.backward(dy)
        dfused = self.fc_f.backward(self.act_f.backward(dy))
        dflat = dfused[:, :, :self.flat_dim]
        dg = dfused[:, :, self.flat_dim:]
        self.fc_g.backward(self.act_g.backward(dg))
        ds = dflat.reshape(self._conv_out_shape)
        ds = self.conv_b.backward(self.act_cb.backward(ds))
        self.conv_a.backward(self.act_ca.backward(ds))

    def param_items(self):
        for lname, layer in self._layers.items():
            for pname, p, g in layer.param_items():
                yield f"{lname}.{pname}", p, g

    def zero_grads(self) -> None:
        for layer in self._layers.values():
            layer.zero_grads()

    def to_arrays(self) -> dict[str, np.ndarray]:
        return {name: p for name, p, _g in self.param_items()}

    def load_arrays(self, arrays: dict[str, np.ndarray]) -> None:
        for name, p, _g in self.param_items():
            src = arrays[name]
            if src.shape != p.shape:
                raise ValueError(f"{name}: shape {src.shape} != {p.shape}")
            p[...] = src.astype(np.float64)

    def spec_dict(self) -> dict:
        return {"task": self.task, "width_scale": self.width_scale,
                "n_out": self.n_out}


def build_model(task: str, width_scale: float = 1.0, seed: int = 0,
                n_labels: int = 32):
    if task == "win":
        return WinProbModel(width_scale, seed)
    if task == "build":
        return BuildOrderModel(n_labels, width_scale, seed)
    if task == "combined-win":
        return CombinedModel(1, width_scale, seed)
    if task == "combined-build":
        return CombinedModel(n_labels, width_scale, seed)
    raise ValueError(f"unknown task {task!r}")
