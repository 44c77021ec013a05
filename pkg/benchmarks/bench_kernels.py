"""Compare the numba and numpy compute backends on the hot kernels.

Usage: python benchmarks/bench_kernels.py [--repeat N]

Each kernel runs on realistic shapes (training-batch GRU segments, the
combined model's strided convolutions, map-sized scatter/disc painting).
The numba side includes one untimed warmup call so JIT compilation is not
counted. Prints one line per kernel with both timings and the speedup.
"""

from __future__ import annotations

import argparse
import importlib
import time

import numpy as np

from msc.nn.backend import numba_available

CASES = []


def case(fn):
    CASES.append(fn)
    return fn


@case
def gru_forward(mod, rng):
    T, B, I, H = 20, 64, 128, 128
    x = rng.standard_normal((T, B, I))
    h0 = rng.standard_normal((B, H))
    Wx = rng.standard_normal((I, 3 * H)) * 0.1
    Whz, Whr, Whn = (rng.standard_normal((H, H)) * 0.1 for _ in range(3))
    b = np.zeros(3 * H)
    return lambda: mod.gru_forward(x, h0, Wx, Whz, Whr, Whn, b)


@case
def gru_backward(mod, rng):
    T, B, I, H = 20, 64, 128, 128
    x = rng.standard_normal((T, B, I))
    h0 = rng.standard_normal((B, H))
    Wx = rng.standard_normal((I, 3 * H)) * 0.1
    Whz, Whr, Whn = (rng.standard_normal((H, H)) * 0.1 for _ in range(3))
    b = np.zeros(3 * H)
    Hs, Z, R, N = mod.gru_forward(x, h0, Wx, Whz, Whr, Whn, b)
    dH = rng.standard_normal((T, B, H))
    return lambda: mod.gru_backward(x, Hs, Z, R, N, Wx, Whz, Whr, Whn, dH)


@case
def conv2d_forward(mod, rng):
    x = rng.standard_normal((16, 13, 64, 64))
    w = rng.standard_normal((16, 13, 3, 3)) * 0.1
    b = np.zeros(16)
    return lambda: mod.conv2d_forward(x, w, b, 2, 1)


@case
def conv2d_backward(mod, rng):
    x = rng.standard_normal((16, 13, 64, 64))
    w = rng.standard_normal((16, 13, 3, 3)) * 0.1
    b = np.zeros(16)
    y = mod.conv2d_forward(x, w, b, 2, 1)
    dy = rng.standard_normal(y.shape)
    return lambda: mod.conv2d_backward(x, w, 2, 1, dy)


@case
def scatter_add(mod, rng):
    xs = rng.integers(0, 64, 5000)
    ys = rng.integers(0, 64, 5000)
    return lambda: mod.scatter_add(xs, ys, 64)


@case
def paint_discs(mod, rng):
    xs = rng.integers(0, 64, 200)
    ys = rng.integers(0, 64, 200)
    return lambda: mod.paint_discs(xs, ys, 8, 64)


def best_of(fn, repeat: int) -> float:
    best = float("inf")
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def main() -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5,
                    help="timed repetitions per kernel (best is reported)")
    args = ap.parse_args()

    mods = {"numpy": importlib.import_module("msc.nn.kernels_numpy")}
    if numba_available():
        mods["numba"] = importlib.import_module("msc.nn.kernels_numba")
    else:
        print("numba not installed; timing the numpy backend only")

    width = max(len(c.__name__) for c in CASES)
    header = f"{'kernel':<{width}}  " + "".join(f"{n:>12}" for n in mods)
    if len(mods) == 2:
        header += f"{'speedup':>10}"
    print(header)
    for case_fn in CASES:
        times = {}
        for name, mod in mods.items():
            rng = np.random.default_rng(0)
            fn = case_fn(mod, rng)
            fn()  # warmup: first numba call compiles
            times[name] = best_of(fn, args.repeat)
        row = f"{case_fn.__name__:<{width}}  "
        row += "".join(f"{times[n] * 1e3:>10.2f}ms" for n in mods)
        if len(times) == 2:
            row += f"{times['numpy'] / times['numba']:>9.1f}x"
        print(row)
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
