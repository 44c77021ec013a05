"""Network layers with explicit forward/backward passes.

Every layer owns float64 parameter arrays and like-shaped gradient
accumulators. backward() adds into the accumulators, so callers zero them
between optimization steps. Dense and activation layers accept any leading
shape and operate on the trailing feature axis; recurrent and convolution
layers dispatch their heavy loops to the active kernel backend.
"""

from __future__ import annotations

import math

import numpy as np

from .backend import kernels


class Layer:
    def __init__(self):
        self.params: dict[str, np.ndarray] = {}
        self.grads: dict[str, np.ndarray] = {}

    def _add_param(self, name: str, value: np.ndarray) -> None:
        self.params[name] = value
        self.grads[name] = np.zeros_like(value)

    def zero_grads(self) -> None:
        for g in self.grads.values():
            g[...] = 0.0

    def param_items(self):
        for name in self.params:
            yield name, self.params[name], self.grads[name]


def _uniform_init(rng: np.random.Generator, fan_in: int, shape) -> np.ndarray:
    bound = math.sqrt(1.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


class Linear(Layer):
    def __init__(self, n_in: int, n_out: int, rng: np.random.Generator):
        super().__init__()
        self.n_in = n_in
        self.n_out = n_out
        self._add_param("W", _uniform_init(rng, n_in, (n_in, n_out)))
        self._add_param("b", _uniform_init(rng, n_in, (n_out,)))
        self._x: np.ndarray | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._x = x
        return x @ self.params["W"] + self.params["b"]

    def backward(self, dy: np.ndarray) -> np.ndarray:
        x = self._x
        x2 = x.reshape(-1, self.n_in)
        dy2 = dy.reshape(-1, self.n_out)
        self.grads["W"] += x2.T @ dy2
        self.grads["b"] += dy2.sum(axis=0)
        return (dy2 @ self.params["W"].T).reshape(x.shape)


class ReLU(Layer):
    def __init__(self):
        super().__init__()
        self._mask: np.ndarray | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        self._mask = x > 0
        return np.where(self._mask, x, 0.0)

    def backward(self, dy: np.ndarray) -> np.ndarray:
        return np.where(self._mask, dy, 0.0)


class Sigmoid(Layer):
    def __init__(self):
        super().__init__()
        self._out: np.ndarray | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        out = np.empty_like(x)
        pos = x >= 0
        out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
        ex = np.exp(x[~pos])
        out[~pos] = ex / (1.0 + ex)
        self._out = out
        return out

    def backward(self, dy: np.ndarray) -> np.ndarray:
        out = self._out
        return dy * out * (1.0 - out)


class Softmax(Layer):
    """Softmax over the trailing axis."""

    def __init__(self):
        super().__init__()
        self._out: np.ndarray | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        shifted = x - x.max(axis=-1, keepdims=True)
        e = np.exp(shifted)
        out = e / e.sum(axis=-1, keepdims=True)
        self._out = out
        return out

    def backward(self, dy: np.ndarray) -> np.ndarray:
        p = self._out
        inner = (dy * p).sum(axis=-1, keepdims=True)
        return p * (dy - inner)


class GRU(Layer):
    """Gated recurrent unit over (T, B, features) sequences.

    Update gate z, reset gate r, candidate n:
        z = sigmoid(x Wxz + h Whz + bz)
        r = sigmoid(x Wxr + h Whr + br)
        n = tanh(x Wxn + (r * h) Whn + bn)
        h' = (1 - z) * n + z * h
    The input projections are packed into one (I, 3H) matrix ordered
    [update | reset | candidate]; the recurrent projections stay separate so
    each matrix product runs on a contiguous square matrix.
    """

    def __init__(self, n_in: int, n_hidden: int, rng: np.random.Generator):
        super().__init__()
        self.n_in = n_in
        self.n_hidden = n_hidden
        self._add_param("Wx", _uniform_init(rng, n_in, (n_in, 3 * n_hidden)))
        self._add_param("Whz", _uniform_init(rng, n_hidden, (n_hidden, n_hidden)))
        self._add_param("Whr", _uniform_init(rng, n_hidden, (n_hidden, n_hidden)))
        self._add_param("Whn", _uniform_init(rng, n_hidden, (n_hidden, n_hidden)))
        self._add_param("b", _uniform_init(rng, n_in, (3 * n_hidden,)))
        self._cache = None
        self.h_last: np.ndarray | None = None

    def initial_state(self, batch: int) -> np.ndarray:
        return np.zeros((batch, self.n_hidden))

    def forward(self, x: np.ndarray, h0: np.ndarray | None = None) -> np.ndarray:
        if h0 is None:
            h0 = self.initial_state(x.shape[1])
        x = np.ascontiguousarray(x)
        h0 = np.ascontiguousarray(h0)
        p = self.params
        Hs, Z, R, N = kernels().gru_forward(
            x, h0, p["Wx"], p["Whz"], p["Whr"], p["Whn"], p["b"]
        )
        self._cache = (x, Hs, Z, R, N)
        self.h_last = Hs[-1]
        return Hs[1:]

    def backward(self, dh_seq: np.ndarray) -> np.ndarray:
        x, Hs, Z, R, N = self._cache
        p = self.params
        dx, dh0, dWx, dWhz, dWhr, dWhn, db = kernels().gru_backward(
            x, Hs, Z, R, N, p["Wx"], p["Whz"], p["Whr"], p["Whn"],
            np.ascontiguousarray(dh_seq),
        )
        self.grads["Wx"] += dWx
        self.grads["Whz"] += dWhz
        self.grads["Whr"] += dWhr
        self.grads["Whn"] += dWhn
        self.grads["b"] += db
        self.dh0 = dh0
        return dx


class Conv2d(Layer):
    """2D cross-correlation on (B, C, H, W) images."""

    def __init__(self, c_in: int, c_out: int, rng: np.random.Generator,
                 kernel: int = 3, stride: int = 2, pad: int = 1):
        super().__init__()
        self.stride = stride
        self.pad = pad
        fan_in = c_in * kernel * kernel
        self._add_param("W", _uniform_init(rng, fan_in, (c_out, c_in, kernel, kernel)))
        self._add_param("b", _uniform_init(rng, fan_in, (c_out,)))
        self._x: np.ndarray | None = None

    def forward(self, x: np.ndarray) -> np.ndarray:
        x = np.ascontiguousarray(x)
        self._x = x
        return kernels().conv2d_forward(
            x, self.params["W"], self.params["b"], self.stride, self.pad
        )

    def backward(self, dy: np.ndarray) -> np.ndarray:
        dx, dw, db = kernels().conv2d_backward(
            self._x, self.params["W"], self.stride, self.pad,
            np.ascontiguousarray(dy),
        )
        self.grads["W"] += dw
        self.grads["b"] += db
        return dx
