"""Numerics core: finite-difference oracles, hand-traced Adam, loss values."""

import math
import os

import numpy as np
import pytest

from msc.nn.backend import backend_name, numba_available
from msc.nn.checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from msc.nn.gradcheck import grad_check, relative_error
from msc.nn.layers import GRU, Conv2d, Linear, ReLU, Sigmoid, Softmax
from msc.nn.losses import bce_loss, nll_loss
from msc.nn.optim import Adam

RNG = np.random.default_rng


def layer_check(layer, x, tol, extra_inputs=(), h=1e-5):
    """Finite-difference check of every parameter and the input gradient."""
    probe = RNG(99).standard_normal(layer.forward(x, *extra_inputs).shape)

    def loss_fn():
        return float((layer.forward(x, *extra_inputs) * probe).sum())

    layer.zero_grads()
    layer.forward(x, *extra_inputs)
    dx = layer.backward(probe)
    items = list(layer.param_items()) + [("x", x, dx)]
    res = grad_check(loss_fn, items, h=h)
    assert res.max_rel_err <= tol, (res.worst_param, res.max_rel_err)
    return res


def test_linear_matches_finite_differences():
    layer = Linear(3, 2, RNG(0))
    x = RNG(1).standard_normal((5, 3))
    layer_check(layer, x, 1e-6)


def test_relu_and_sigmoid_and_softmax_backward():
    x = RNG(2).standard_normal((4, 6))
    for layer, tol in [(ReLU(), 1e-6), (Sigmoid(), 1e-6), (Softmax(), 1e-5)]:
        layer_check(layer, x.copy(), tol)


def test_gru_zero_params_halve_the_carried_state():
    gru = GRU(3, 4, RNG(0))
    for _name, p, _g in gru.param_items():
        p[...] = 0.0
    h0 = np.array([[1.0, -2.0, 0.5, 4.0]])
    out = gru.forward(np.zeros((1, 1, 3)), h0)
    np.testing.assert_allclose(out[0], 0.5 * h0, atol=1e-15)


def test_gru_matches_finite_differences():
    gru = GRU(3, 5, RNG(3))
    x = RNG(4).standard_normal((6, 2, 3))
    layer_check(gru, x, 1e-4)


def test_gru_initial_state_gradient():
    gru = GRU(2, 3, RNG(5))
    x = RNG(6).standard_normal((4, 2, 2))
    h0 = RNG(7).standard_normal((2, 3))
    probe = RNG(8).standard_normal((4, 2, 3))

    def loss_fn():
        return float((gru.forward(x, h0) * probe).sum())

    gru.zero_grads()
    gru.forward(x, h0)
    gru.backward(probe)
    res = grad_check(loss_fn, [("h0", h0, gru.dh0)])
    assert res.max_rel_err <= 1e-5


def test_conv2d_matches_finite_differences():
    conv = Conv2d(1, 2, RNG(9), kernel=3, stride=2, pad=1)
    x = RNG(10).standard_normal((2, 1, 4, 4))
    layer_check(conv, x, 1e-5)
    assert conv.forward(x).shape == (2, 2, 2, 2)


def test_conv2d_stride_one_shapes_and_gradient():
    conv = Conv2d(3, 4, RNG(11), kernel=3, stride=1, pad=1)
    x = RNG(12).standard_normal((1, 3, 5, 5))
    assert conv.forward(x).shape == (1, 4, 5, 5)
    layer_check(conv, x, 1e-5)


def test_linear_sigmoid_bce_network_end_to_end():
    lin = Linear(4, 1, RNG(13))
    sig = Sigmoid()
    x = RNG(14).standard_normal((8, 4))
    target = RNG(15).integers(0, 2, (8, 1)).astype(float)
    mask = np.ones((8, 1))

    def loss_fn():
        return bce_loss(sig.forward(lin.forward(x)), target, mask)[0]

    lin.zero_grads()
    _loss, dp = bce_loss(sig.forward(lin.forward(x)), target, mask)
    lin.backward(sig.backward(dp))
    res = grad_check(loss_fn, lin.param_items())
    assert res.max_rel_err <= 1e-6


def test_bce_unit_values():
    one = np.ones((1, 1))
    assert math.isclose(bce_loss(0.5 * one, one, one)[0], 0.693147,
                        abs_tol=1e-6)
    assert math.isclose(bce_loss(0.5 * one, 0 * one, one)[0], 0.693147,
                        abs_tol=1e-6)
    assert math.isclose(bce_loss(0.9 * one, 0 * one, one)[0], 2.302585,
                        abs_tol=1e-6)


def test_nll_unit_values():
    uniform4 = np.full((1, 4), 0.25)
    label = np.array([2])
    mask = np.ones(1)
    assert math.isclose(nll_loss(uniform4, label, mask)[0], 1.386294,
                        abs_tol=1e-6)
    dist = np.array([[0.2, 0.5, 0.3]])
    assert math.isclose(nll_loss(dist, np.array([0]), mask)[0], 1.609438,
                        abs_tol=1e-6)


def test_losses_average_over_valid_steps_only():
    p = np.array([[0.5], [0.9]])
    target = np.array([[1.0], [1.0]])
    mask = np.array([[1.0], [0.0]])
    loss, dp = bce_loss(p, target, mask)
    assert math.isclose(loss, -math.log(0.5), abs_tol=1e-12)
    assert dp[1, 0] == 0.0

    dist = np.array([[0.25, 0.75], [0.1, 0.9]])
    labels = np.array([0, 0])
    loss, dd = nll_loss(dist, labels, np.array([1.0, 0.0]))
    assert math.isclose(loss, -math.log(0.25), abs_tol=1e-12)
    assert dd[1, 0] == 0.0


def test_empty_mask_gives_zero_loss_and_gradient():
    p = np.full((3, 1), 0.2)
    loss, dp = bce_loss(p, np.ones((3, 1)), np.zeros((3, 1)))
    assert loss == 0.0 and not dp.any()
    dist = np.full((3, 4), 0.25)
    loss, dd = nll_loss(dist, np.zeros(3, dtype=int), np.zeros(3))
    assert loss == 0.0 and not dd.any()


def test_clamped_probabilities_get_zero_gradient():
    p = np.array([[0.0], [1.0], [0.5]])
    target = np.array([[1.0], [0.0], [1.0]])
    mask = np.ones((3, 1))
    loss, dp = bce_loss(p, target, mask)
    assert dp[0, 0] == 0.0 and dp[1, 0] == 0.0 and dp[2, 0] != 0.0
    assert math.isclose(loss, (2 * -math.log(1e-7) - math.log(0.5)) / 3,
                        rel_tol=1e-9)

    dist = np.array([[0.0, 1.0]])
    loss, dd = nll_loss(dist, np.array([0]), np.ones(1))
    assert dd[0, 0] == 0.0
    assert math.isclose(loss, -math.log(1e-7), rel_tol=1e-9)


def test_adam_first_step_moves_by_minus_lr():
    p = np.array([3.0, -1.0])
    g = np.ones(2)
    opt = Adam([("p", p, g)], lr=0.001)
    opt.step()
    np.testing.assert_allclose(p, [3.0 - 0.001, -1.0 - 0.001], atol=1e-6)
    # Exactly -lr / (1 + eps), the epsilon sitting outside the square root.
    assert math.isclose(p[0], 3.0 - 0.001 / (1 + 1e-8), rel_tol=1e-15)


def test_adam_two_steps_match_hand_trace():
    lr, b1, b2, eps = 0.001, 0.9, 0.999, 1e-8
    p = np.array([0.7])
    g = np.array([1.0])
    opt = Adam([("p", p, g)], lr=lr)

    # Step-by-step reference with scalars.
    theta, m, v = 0.7, 0.0, 0.0
    for t, grad in [(1, 1.0), (2, -0.5)]:
        m = b1 * m + (1 - b1) * grad
        v = b2 * v + (1 - b2) * grad * grad
        mhat = m / (1 - b1**t)
        vhat = v / (1 - b2**t)
        theta -= lr * mhat / (math.sqrt(vhat) + eps)

    opt.step()
    g[0] = -0.5
    opt.step()
    assert math.isclose(p[0], theta, rel_tol=1e-14)


def test_adam_shared_state_per_parameter():
    p1, p2 = np.zeros(1), np.zeros(1)
    g1, g2 = np.ones(1), np.full(1, 2.0)
    opt = Adam([("a", p1, g1), ("b", p2, g2)], lr=0.1)
    opt.step()
    # Any nonzero constant gradient gives the same first normalized step,
    # up to the epsilon's relative weight (eps / |g|).
    assert math.isclose(p1[0], p2[0], rel_tol=1e-8)
    opt.zero_grads()
    assert g1[0] == 0.0 and g2[0] == 0.0


def test_relative_error_floor():
    assert relative_error(0.0, 0.0) == 0.0
    assert relative_error(1e-9, 0.0) == pytest.approx(1e-3)


def test_grad_check_flags_corrupted_backward():
    layer = Linear(3, 2, RNG(21))
    x = RNG(22).standard_normal((4, 3))
    probe = RNG(23).standard_normal((4, 2))

    def loss_fn():
        return float((layer.forward(x) * probe).sum())

    layer.zero_grads()
    layer.forward(x)
    layer.backward(probe)
    layer.grads["W"][0, 0] += 0.5  # sabotage
    res = grad_check(loss_fn, layer.param_items())
    assert res.max_rel_err > 1e-2
    assert res.worst_param == "W"


def test_checkpoint_round_trip(tmp_path):
    arrays = {
        "layer0.W": RNG(30).standard_normal((3, 4)).astype(np.float32),
        "layer0.b": np.zeros(4, dtype=np.float32),
        "gru.Wx": RNG(31).standard_normal((4, 12)).astype(np.float32),
    }
    path = tmp_path / "m.mscw"
    save_checkpoint(path, arrays)
    back = load_checkpoint(path)
    assert list(back) == list(arrays)
    for k in arrays:
        np.testing.assert_array_equal(back[k], arrays[k])
        assert back[k].dtype == np.float32
    assert not list(tmp_path.glob("*.partial"))


def test_checkpoint_write_is_byte_deterministic(tmp_path):
    arrays = {"w": np.arange(6, dtype=np.float32).reshape(2, 3)}
    a, b = tmp_path / "a.mscw", tmp_path / "b.mscw"
    save_checkpoint(a, arrays)
    save_checkpoint(b, arrays)
    assert a.read_bytes() == b.read_bytes()
    assert a.read_bytes()[:4] == b"MSCW"


def test_checkpoint_detects_corruption(tmp_path):
    path = tmp_path / "m.mscw"
    save_checkpoint(path, {"w": np.ones(3, dtype=np.float32)})
    blob = bytearray(path.read_bytes())
    blob[len(blob) // 2] ^= 0xFF
    path.write_bytes(bytes(blob))
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_checkpoint_rejects_truncation(tmp_path):
    path = tmp_path / "m.mscw"
    save_checkpoint(path, {"w": np.ones(8, dtype=np.float32)})
    path.write_bytes(path.read_bytes()[:-5])
    with pytest.raises(CheckpointError):
        load_checkpoint(path)


def test_backend_env_selects_kernels(monkeypatch):
    monkeypatch.setenv("MSC_BACKEND", "numpy")
    assert backend_name() == "numpy"
    monkeypatch.setenv("MSC_BACKEND", "bogus")
    with pytest.raises(ValueError):
        backend_name()
    monkeypatch.delenv("MSC_BACKEND")
    assert backend_name() in ("numba", "numpy")


@pytest.mark.skipif(not numba_available(), reason="numba not installed")
def test_backends_agree(monkeypatch):
    from msc.nn import kernels_numba as kb
    from msc.nn import kernels_numpy as kp

    rng = RNG(40)
    T, B, I, H = 4, 3, 5, 6
    x = rng.standard_normal((T, B, I))
    h0 = rng.standard_normal((B, H))
    Wx = rng.standard_normal((I, 3 * H))
    Whz, Whr, Whn = (rng.standard_normal((H, H)) for _ in range(3))
    b = rng.standard_normal(3 * H)
    out_p = kp.gru_forward(x, h0, Wx, Whz, Whr, Whn, b)
    out_b = kb.gru_forward(x, h0, Wx, Whz, Whr, Whn, b)
    for a, c in zip(out_p, out_b):
        np.testing.assert_allclose(a, c, atol=1e-12)

    dH = rng.standard_normal((T, B, H))
    back_p = kp.gru_backward(x, out_p[0], out_p[1], out_p[2], out_p[3],
                             Wx, Whz, Whr, Whn, dH)
    back_b = kb.gru_backward(x, out_b[0], out_b[1], out_b[2], out_b[3],
                             Wx, Whz, Whr, Whn, dH)
    for a, c in zip(back_p, back_b):
        np.testing.assert_allclose(a, c, atol=1e-12)

    xi = rng.standard_normal((2, 3, 8, 8))
    w = rng.standard_normal((4, 3, 3, 3))
    bias = rng.standard_normal(4)
    y_p = kp.conv2d_forward(xi, w, bias, 2, 1)
    y_b = kb.conv2d_forward(xi, w, bias, 2, 1)
    np.testing.assert_allclose(y_p, y_b, atol=1e-12)
    dy = rng.standard_normal(y_p.shape)
    for a, c in zip(kp.conv2d_backward(xi, w, 2, 1, dy),
                    kb.conv2d_backward(xi, w, 2, 1, dy)):
        np.testing.assert_allclose(a, c, atol=1e-12)

    xs = rng.integers(0, 64, 50)
    ys = rng.integers(0, 64, 50)
    np.testing.assert_array_equal(kp.scatter_add(xs, ys, 64),
                                  kb.scatter_add(xs, ys, 64))
    np.testing.assert_array_equal(kp.paint_discs(xs, ys, 8, 64),
                                  kb.paint_discs(xs, ys, 8, 64))
