"""Pure-numpy compute kernels.

This module defines the backend call surface; the jitted twin implements the
same functions with identical semantics. All floating inputs are float64 and
C-contiguous; shapes follow the (time, batch, feature) convention for
sequences and (batch, channel, height, width) for images.
"""

from __future__ import annotations

import numpy as np


def _sigmoid(x: np.ndarray) -> np.ndarray:
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def gru_forward(x, h0, Wx, Whz, Whr, Whn, b):
    """Run a full GRU sequence.

    x: (T, B, I), h0: (B, H), Wx: (I, 3H) packed [update|reset|candidate],
    Whz/Whr/Whn: (H, H), b: (3H,).

    Returns (Hs, Z, R, N) where Hs is (T+1, B, H) with Hs[0] == h0 and the
    gate tensors are (T, B, H), everything the backward pass needs.
    """
    T, B, _ = x.shape
    H = h0.shape[1]
    gx = (x.reshape(T * B, -1) @ Wx + b).reshape(T, B, 3 * H)
    Hs = np.empty((T + 1, B, H))
    Z = np.empty((T, B, H))
    R = np.empty((T, B, H))
    N = np.empty((T, B, H))
    Hs[0] = h0
    h = h0
    for t in range(T):
        g = gx[t]
        z = _sigmoid(g[:, :H] + h @ Whz)
        r = _sigmoid(g[:, H:2 * H] + h @ Whr)
        n = np.tanh(g[:, 2 * H:] + (r * h) @ Whn)
        h = (1.0 - z) * n + z * h
        Z[t] = z
        R[t] = r
        N[t] = n
        Hs[t + 1] = h
    return Hs, Z, R, N


def gru_backward(x, Hs, Z, R, N, Wx, Whz, Whr, Whn, dH):
    """Backprop through a full GRU sequence.

    dH holds the upstream gradient on every emitted hidden state h_1..h_T.
    Returns (dx, dh0, dWx, dWhz, dWhr, dWhn, db).
    """
    T, B, I = x.shape
    H = Hs.shape[2]
    dpre = np.empty((T, B, 3 * H))
    dWhz = np.zeros((H, H))
    dWhr = np.zeros((H, H))
    dWhn = np.zeros((H, H))
    carry = np.zeros((B, H))
    for t in range(T - 1, -1, -1):
        dh = dH[t] + carry
        z, r, n = Z[t], R[t], N[t]
        hprev = Hs[t]
        dz_pre = dh * (hprev - n) * z * (1.0 - z)
        dn_pre = dh * (1.0 - z) * (1.0 - n * n)
        drh = dn_pre @ Whn.T
        dr_pre = drh * hprev * r * (1.0 - r)
        carry = dh * z + drh * r + dz_pre @ Whz.T + dr_pre @ Whr.T
        dWhz += hprev.T @ dz_pre
        dWhr += hprev.T @ dr_pre
        dWhn += (r * hprev).T @ dn_pre
        dpre[t, :, :H] = dz_pre
        dpre[t, :, H:2 * H] = dr_pre
        dpre[t, :, 2 * H:] = dn_pre
    flat = dpre.reshape(T * B, 3 * H)
    dWx = x.reshape(T * B, I).T @ flat
    db = flat.sum(axis=0)
    dx = (flat @ Wx.T).reshape(T, B, I)
    return dx, carry, dWx, dWhz, dWhr, dWhn, db


def _out_size(size: int, k: int, stride: int, pad: int) -> int:
    return (size + 2 * pad - k) // stride + 1


def conv2d_forward(x, w, b, stride, pad):
    """Cross-correlation: x (B,C,H,W), w (O,C,kh,kw), b (O,) -> (B,O,Ho,Wo)."""
    B, C, H, W = x.shape
    O, _, kh, kw = w.shape
    Ho = _out_size(H, kh, stride, pad)
    Wo = _out_size(W, kw, stride, pad)
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
    y = np.zeros((B, O, Ho, Wo))
    for ki in range(kh):
        for kj in range(kw):
            patch = xp[:, :, ki:ki + stride * Ho:stride, kj:kj + stride * Wo:stride]
            # (B,C,Ho,Wo) x (O,C) over the channel axis
            y += np.moveaxis(np.tensordot(patch, w[:, :, ki, kj], axes=([1], [1])), 3, 1)
    y += b[None, :, None, None]
    return y


def conv2d_backward(x, w, stride, pad, dy):
    """Gradients of conv2d_forward: returns (dx, dw, db)."""
    B, C, H, W = x.shape
    O, _, kh, kw = w.shape
    _, _, Ho, Wo = dy.shape
    xp = np.pad(x, ((0, 0), (0, 0), (pad, pad), (pad, pad))) if pad else x
    dxp = np.zeros_like(xp)
    dw = np.zeros_like(w)
    db = dy.sum(axis=(0, 2, 3))
    for ki in range(kh):
        for kj in range(kw):
            patch = xp[:, :, ki:ki + stride * Ho:stride, kj:kj + stride * Wo:stride]
            dw[:, :, ki, kj] = np.tensordot(dy, patch, axes=([0, 2, 3], [0, 2, 3]))
            dpatch = np.moveaxis(np.tensordot(dy, w[:, :, ki, kj], axes=([1], [0])), 3, 1)
            dxp[:, :, ki:ki + stride * Ho:stride, kj:kj + stride * Wo:stride] += dpatch
    dx = dxp[:, :, pad:pad + H, pad:pad + W] if pad else dxp
    return dx, dw, db


def scatter_add(xs, ys, size):
    """Count points per cell: int coordinate arrays -> (size, size) float64."""
    out = np.zeros((size, size))
    np.add.at(out, (xs, ys), 1.0)
    return out


_disc_cache: dict[int, np.ndarray] = {}


def _disc(radius: int) -> np.ndarray:
    mask = _disc_cache.get(radius)
    if mask is None:
        d = np.arange(-radius, radius + 1)
        mask = d[:, None] ** 2 + d[None, :] ** 2 <= radius * radius
        _disc_cache[radius] = mask
    return mask


def paint_discs(xs, ys, radius, size):
    """Union of Euclidean discs around points -> (size, size) 0/1 float64."""
    disc = _disc(radius)
    span = 2 * radius + 1
    canvas = np.zeros((size + 2 * radius, size + 2 * radius), dtype=bool)
    for x, y in zip(xs, ys):
        sub = canvas[x:x + span, y:y + span]
        np.logical_or(sub, disc, out=sub)
    return canvas[radius:radius + size, radius:radius + size].astype(np.float64)
