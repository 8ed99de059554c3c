import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.stats import truncnorm

from uav_moddpg.nn import (Layer, Mlp, OptimState, activate,
                           gradient_check, init_mlp, load_mlp, optimizer_step, relative_error,
                           save_mlp, truncated_normal)


def random_net(rng, max_sizes=(8, 16, 8, 2)):
    depth = int(rng.integers(1, len(max_sizes)))
    sizes = [int(rng.integers(1, m + 1)) for m in max_sizes[:depth + 1]]
    acts = [str(rng.choice(["relu", "sigmoid", "tanh", "linear"])) for _ in range(depth)]
    return init_mlp(sizes, acts, rng)


def test_init_bounds_and_bias():
    net = init_mlp([6, 5, 3], ["relu", "linear"], np.random.default_rng(0))
    sigma = math.sqrt(2 / 6)
    assert sigma == pytest.approx(0.5774, abs=1e-4)
    assert np.all(np.abs(net.layers[0].weight) <= 2 * sigma)
    assert all(np.all(l.bias == 0.001) for l in net.layers)


def test_truncated_normal_moments():
    sigma = math.sqrt(2 / 6)
    x = truncated_normal(np.random.default_rng(1), sigma, 10**5)
    theory = truncnorm(-2, 2, scale=sigma).std()
    assert abs(x.std() - theory) < 0.05 * theory
    assert np.all(np.abs(x) <= 2 * sigma)


def test_init_is_deterministic():
    a = init_mlp([4, 8, 2], ["tanh", "linear"], np.random.default_rng(3))
    b = init_mlp([4, 8, 2], ["tanh", "linear"], np.random.default_rng(3))
    assert all(np.array_equal(p, q) for p, q in zip(a.params(), b.params()))


@pytest.mark.parametrize("sizes, acts", [([3], []), ([3, 2], []), ([3, 2, 1], ["relu"])])
def test_init_rejects_bad_lists(sizes, acts):
    with pytest.raises(ValueError):
        init_mlp(sizes, acts, np.random.default_rng())


def test_layers_must_chain():
    with pytest.raises(ValueError):
        Mlp([Layer(np.zeros((4, 3)), np.zeros(4), "relu"), Layer(np.zeros((2, 5)), np.zeros(2), "relu")])
    with pytest.raises(ValueError):
        Mlp([Layer(np.zeros((4, 3)), np.zeros(4), "softmax")])


def test_identity_forward():
    net = Mlp([Layer(np.eye(3), np.zeros(3), "linear")])
    assert np.array_equal(net.forward([1.0, -2.0, 3.0]), [1.0, -2.0, 3.0])


def test_relu_negative_is_zero():
    net = Mlp([Layer(np.eye(2), np.zeros(2), "relu")])
    assert np.array_equal(net.forward([-1.0, 2.0]), [0.0, 2.0])


def test_forward_dimension_mismatch():
    net = init_mlp([3, 2], ["linear"], np.random.default_rng())
    with pytest.raises(ValueError):
        net.forward([1.0, 2.0])


def naive_forward(net, x):
    fn = {"relu": lambda z: max(z, 0.0), "sigmoid": lambda z: 1 / (1 + math.exp(-z)),
          "tanh": math.tanh, "linear": lambda z: z}
    a = list(x)
    for layer in net.layers:
        nxt = []
        for i in range(layer.weight.shape[0]):
            z = layer.bias[i]
            for k in range(layer.weight.shape[1]):
                z += layer.weight[i, k] * a[k]
            nxt.append(fn[layer.activation](z))
        a = nxt
    return np.array(a)


def test_forward_matches_naive_loops():
    rng = np.random.default_rng(5)
    for _ in range(20):
        net = random_net(rng)
        x = rng.normal(size=net.sizes[0])
        assert np.allclose(net.forward(x), naive_forward(net, x), rtol=1e-12, atol=1e-12)


def test_batched_forward_equals_rowwise():
    rng = np.random.default_rng(6)
    net = init_mlp([5, 7, 3], ["relu", "tanh"], rng)
    xs = rng.normal(size=(9, 5))
    assert np.allclose(net.forward(xs), [net.forward(x) for x in xs], rtol=1e-14, atol=0)


def test_linear_layer_weight_gradient():
    net = Mlp([Layer(np.zeros((1, 3)), np.zeros(1), "linear")])
    x = np.array([1.0, 2.0, 3.0])
    net.forward(x)
    (dw, db), dx = net.backward([1.0])
    assert np.array_equal(dw, [x]) and np.array_equal(db, [1.0])
    assert np.array_equal(dx, [0.0, 0.0, 0.0])


def test_zero_output_gradient():
    rng = np.random.default_rng(2)
    net = init_mlp([4, 6, 2], ["tanh", "sigmoid"], rng)
    net.forward(rng.normal(size=4))
    grads, dx = net.backward(np.zeros(2))
    assert all(np.all(g == 0) for g in grads) and np.all(dx == 0)


def test_backward_before_forward():
    with pytest.raises(RuntimeError):
        init_mlp([2, 2], ["linear"], np.random.default_rng()).backward([1.0, 1.0])


def test_gradients_match_finite_differences():
    rng = np.random.default_rng(8)
    errors = []
    for _ in range(20):
        net = random_net(rng)
        errors.append(gradient_check(net, rng.normal(size=net.sizes[0]), rng))
    assert max(errors) < 1e-4


def test_batched_gradients_are_row_sums():
    rng = np.random.default_rng(9)
    net = init_mlp([3, 5, 2], ["tanh", "linear"], rng)
    xs, gs = rng.normal(size=(4, 3)), rng.normal(size=(4, 2))
    net.forward(xs)
    batched, dx = net.backward(gs)
    total = [np.zeros_like(p) for p in net.params()]
    for x, g in zip(xs, gs):
        net.forward(x)
        grads, dxi = net.backward(g)
        total = [t + gi for t, gi in zip(total, grads)]
    assert all(np.allclose(a, b, rtol=1e-12, atol=1e-15) for a, b in zip(batched, total))


def test_input_gradient_matches_finite_differences():
    rng = np.random.default_rng(10)
    net = init_mlp([4, 6, 3], ["tanh", "sigmoid"], rng)
    x, r = rng.normal(size=4), rng.normal(size=3)
    net.forward(x)
    _, dx = net.backward(r)
    eps = 1e-6
    fd = [(np.dot(net.forward(x + eps * e), r) - np.dot(net.forward(x - eps * e), r)) / (2 * eps)
          for e in np.eye(4)]
    assert relative_error(dx, fd) < 1e-6


def scalar_net(value):
    return Mlp([Layer(np.array([[value]]), np.zeros(1), "linear")])


def test_adam_first_step():
    net = scalar_net(0.5)
    optimizer_step(net, [np.ones((1, 1)), np.zeros(1)], OptimState.for_mlp(net, 1e-3))
    assert net.layers[0].weight[0, 0] == pytest.approx(0.5 - 1e-3, rel=1e-6)


def test_adam_zero_gradient_is_noop():
    net = scalar_net(0.5)
    optimizer_step(net, [np.zeros((1, 1)), np.zeros(1)], OptimState.for_mlp(net))
    assert net.layers[0].weight[0, 0] == 0.5 and net.layers[0].bias[0] == 0.0


def test_adam_quadratic_bowl():
    net = scalar_net(1.0)
    state = OptimState.for_mlp(net, lr=1e-2)
    target = 0.3
    for _ in range(1000):
        w = net.layers[0].weight
        optimizer_step(net, [2 * (w - target), np.zeros(1)], state)
    assert abs(net.layers[0].weight[0, 0] - target) < 1e-6


def test_adam_rejects_bad_gradients():
    net = scalar_net(1.0)
    state = OptimState.for_mlp(net)
    with pytest.raises(FloatingPointError):
        optimizer_step(net, [np.full((1, 1), np.nan), np.zeros(1)], state)
    with pytest.raises(ValueError):
        optimizer_step(net, [np.zeros((2, 1)), np.zeros(1)], state)
    assert state.t == 0


def test_optimizer_keeps_shapes():
    rng = np.random.default_rng(4)
    net = init_mlp([3, 4, 2], ["relu", "linear"], rng)
    shapes = [p.shape for p in net.params()]
    state = OptimState.for_mlp(net)
    for _ in range(5):
        net.forward(rng.normal(size=3))
        grads, _ = net.backward(rng.normal(size=2))
        optimizer_step(net, grads, state)
    assert [p.shape for p in net.params()] == shapes


def test_checkpoint_round_trip(tmp_path):
    net = init_mlp([6, 5, 4, 2], ["relu", "tanh", "linear"], np.random.default_rng(12))
    path = tmp_path / "net.txt"
    save_mlp(net, path)
    back = load_mlp(path)
    assert back.activations == net.activations
    assert all(np.array_equal(a, b) for a, b in zip(back.params(), net.params()))
    lines = path.read_text().splitlines()
    assert lines[0] == "layers: 6 5 4 2" and len(lines) == 1 + 3 * 3


def test_checkpoint_rejects_corruption(tmp_path):
    path = tmp_path / "bad.txt"
    path.write_text("layers: 2 2\nlinear\n1 2 3\n0 0\n")
    with pytest.raises(ValueError):
        load_mlp(path)
    path.write_text("2 2\n")
    with pytest.raises(ValueError):
        load_mlp(path)


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(["relu", "sigmoid", "tanh", "linear"]),
       st.lists(st.floats(-30, 30), min_size=1, max_size=20))
def test_activations_finite_and_bounded(tag, zs):
    a = activate(tag, np.array(zs))
    assert np.all(np.isfinite(a))
    if tag in ("sigmoid", "tanh"):
        assert np.all(np.abs(a) <= 1)
