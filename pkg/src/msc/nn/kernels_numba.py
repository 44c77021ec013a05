"""Jitted compute kernels, semantics identical to the pure-numpy module.

Whole sequences and whole images are processed inside single jitted calls so
the per-step Python dispatch cost disappears. Matrix products go through BLAS
via np.dot on contiguous float64 arrays; everything else is explicit loops.
"""

from __future__ import annotations

import numpy as np
from numba import njit


@njit(cache=True)
def gru_forward(x, h0, Wx, Whz, Whr, Whn, b):
    T, B, I = x.shape
    H = h0.shape[1]
    gx = np.dot(np.ascontiguousarray(x).reshape(T * B, I), Wx)
    Hs = np.empty((T + 1, B, H))
    Z = np.empty((T, B, H))
    R = np.empty((T, B, H))
    N = np.empty((T, B, H))
    Hs[0] = h0
    h = np.ascontiguousarray(h0)
    for t in range(T):
        az = np.dot(h, Whz)
        ar = np.dot(h, Whr)
        base = t * B
        z = np.empty((B, H))
        r = np.empty((B, H))
        for bi in range(B):
            for k in range(H):
                z[bi, k] = 1.0 / (1.0 + np.exp(-(gx[base + bi, k] + b[k] + az[bi, k])))
                r[bi, k] = 1.0 / (1.0 + np.exp(-(gx[base + bi, H + k] + b[H + k] + ar[bi, k])))
        an = np.dot(r * h, Whn)
        hn = np.empty((B, H))
        for bi in range(B):
            for k in range(H):
                n = np.tanh(gx[base + bi, 2 * H + k] + b[2 * H + k] + an[bi, k])
                N[t, bi, k] = n
                hn[bi, k] = (1.0 - z[bi, k]) * n + z[bi, k] * h[bi, k]
        Z[t] = z
        R[t] = r
        h = hn
        Hs[t + 1] = h
    return Hs, Z, R, N


@njit(cache=True)
def gru_backward(x, Hs, Z, R, N, Wx, Whz, Whr, Whn, dH):
    T, B, I = x.shape
    H = Hs.shape[2]
    WhzT = np.ascontiguousarray(Whz.T)
    WhrT = np.ascontiguousarray(Whr.T)
    WhnT = np.ascontiguousarray(Whn.T)
    WxT = np.ascontiguousarray(Wx.T)
    dpre = np.empty((T, B, 3 * H))
    dWhz = np.zeros((H, H))
    dWhr = np.zeros((H, H))
    dWhn = np.zeros((H, H))
    carry = np.zeros((B, H))
    for t in range(T - 1, -1, -1):
        z = Z[t]
        r = R[t]
        n = N[t]
        hprev = np.ascontiguousarray(Hs[t])
        dz_pre = np.empty((B, H))
        dn_pre = np.empty((B, H))
        for bi in range(B):
            for k in range(H):
                dh = dH[t, bi, k] + carry[bi, k]
                zv = z[bi, k]
                nv = n[bi, k]
                dz_pre[bi, k] = dh * (hprev[bi, k] - nv) * zv * (1.0 - zv)
                dn_pre[bi, k] = dh * (1.0 - zv) * (1.0 - nv * nv)
                carry[bi, k] = dh * zv
        drh = np.dot(dn_pre, WhnT)
        dr_pre = drh * hprev * r * (1.0 - r)
        carry = carry + drh * r + np.dot(dz_pre, WhzT) + np.dot(dr_pre, WhrT)
        dWhz += np.dot(hprev.T, dz_pre)
        dWhr += np.dot(hprev.T, dr_pre)
        dWhn += np.dot(np.ascontiguousarray(r * hprev).T, dn_pre)
        dpre[t, :, :H] = dz_pre
        dpre[t, :, H:2 * H] = dr_pre
        dpre[t, :, 2 * H:] = dn_pre
    flat = np.ascontiguousarray(dpre).reshape(T * B, 3 * H)
    x2 = np.ascontiguousarray(x).reshape(T * B, I)
    dWx = np.dot(x2.T, flat)
    db = np.zeros(3 * H)
    for i in range(T * B):
        for k in range(3 * H):
            db[k] += flat[i, k]
    dx = np.dot(flat, WxT).reshape(T, B, I)
    return dx, carry, dWx, dWhz, dWhr, dWhn, db


@njit(cache=True)
def conv2d_forward(x, w, b, stride, pad):
    B, C, H, W = x.shape
    O, _, kh, kw = w.shape
    Ho = (H + 2 * pad - kh) // stride + 1
    Wo = (W + 2 * pad - kw) // stride + 1
    xp = np.zeros((B, C, H + 2 * pad, W + 2 * pad))
    xp[:, :, pad:pad + H, pad:pad + W] = x
    y = np.empty((B, O, Ho, Wo))
    for bi in range(B):
        for o in range(O):
            for i in range(Ho):
                for j in range(Wo):
                    acc = b[o]
                    for c in range(C):
                        for ki in range(kh):
                            for kj in range(kw):
                                acc += xp[bi, c, i * stride + ki, j * stride + kj] \
                                    * w[o, c, ki, kj]
                    y[bi, o, i, j] = acc
    return y


@njit(cache=True)
def conv2d_backward(x, w, stride, pad, dy):
    B, C, H, W = x.shape
    O, _, kh, kw = w.shape
    Ho = dy.shape[2]
    Wo = dy.shape[3]
    xp = np.zeros((B, C, H + 2 * pad, W + 2 * pad))
    xp[:, :, pad:pad + H, pad:pad + W] = x
    dxp = np.zeros_like(xp)
    dw = np.zeros_like(w)
    db = np.zeros(O)
    for bi in range(B):
        for o in range(O):
            for i in range(Ho):
                for j in range(Wo):
                    g = dy[bi, o, i, j]
                    db[o] += g
                    for c in range(C):
                        for ki in range(kh):
                            for kj in range(kw):
                                dw[o, c, ki, kj] += g * xp[bi, c, i * stride + ki,
                                                           j * stride + kj]
                                dxp[bi, c, i * stride + ki, j * stride + kj] += \
                                    g * w[o, c, ki, kj]
    dx = dxp[:, :, pad:pad + H, pad:pad + W]
    return np.ascontiguousarray(dx), dw, db


@njit(cache=True)
def scatter_add(xs, ys, size):
    out = np.zeros((size, size))
    for i in range(xs.shape[0]):
        out[xs[i], ys[i]] += 1.0
    return out


@njit(cache=True)
def paint_discs(xs, ys, radius, size):
    out = np.zeros((size, size))
    r2 = radius * radius
    for i in range(xs.shape[0]):
        x = xs[i]
        y = ys[i]
        x0 = max(0, x - radius)
        x1 = min(size - 1, x + radius)
        y0 = max(0, y - radius)
        y1 = min(size - 1, y + radius)
        for px in range(x0, x1 + 1):
            dx = px - x
            for py in range(y0, y1 + 1):
                dy = py - y
                if dx * dx + dy * dy <= r2:
                    out[px, py] = 1.0
    return out
