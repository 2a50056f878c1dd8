"""Tests for the dense network core: masked softmax, backprop, Adam, serialization."""

import json

import numpy as np
import pytest

from src.agents.network import AdamOptimizer, DenseNetwork, global_norm, masked_softmax


def test_masked_softmax_values():
    p = masked_softmax(np.log([2.0, 1.0, 1.0]))
    assert p == pytest.approx([0.5, 0.25, 0.25])
    p = masked_softmax(np.zeros(4), np.array([1, 1, 0, 0]))
    assert p.tolist() == [0.5, 0.5, 0.0, 0.0]
    p = masked_softmax(np.array([3.0, -1.0, 7.0]), np.array([0, 1, 0]))
    assert p.tolist() == [0.0, 1.0, 0.0]


def test_masked_softmax_exact_zeros_and_unit_sum():
    rng = np.random.default_rng(0)
    logits = rng.normal(scale=20.0, size=(2000, 26))
    masks = rng.random((2000, 26)) < 0.3
    masks[:, 0] = True
    p = masked_softmax(logits, masks)
    assert (p[~masks] == 0.0).all()
    assert np.abs(p.sum(axis=1) - 1.0).max() <= 1e-9
    # renormalization equals a softmax over the feasible subset
    row = 7
    sub = logits[row, masks[row]]
    expected = np.exp(sub - sub.max()) / np.exp(sub - sub.max()).sum()
    assert p[row, masks[row]] == pytest.approx(expected, rel=1e-12)


NETWORK_SHAPES = [
    (48, 534, 336),   # centralized DQN
    (48, 258, 336),   # centralized PPO actor
    (48, 258, 1),     # centralized PPO critic
    (48, 178, 26),    # per-agent DQN
    (48, 86, 6),      # per-agent PPO actor
    (48, 86, 1),      # per-agent PPO critic
]


@pytest.mark.parametrize("n_in,hidden,n_out", NETWORK_SHAPES)
def test_gradient_check(n_in, hidden, n_out):
    rng = np.random.default_rng(hidden + n_out)
    net = DenseNetwork.with_hidden(n_in, hidden, n_out, seed=1)
    x = rng.random((3, n_in))
    g = rng.normal(size=(3, n_out))

    def loss() -> float:
        return float((net.forward(x) * g).sum())

    _, cache = net.forward_cached(x)
    grads = net.backward(cache, g)
    eps = 1e-6
    for param, grad in zip(net.parameters(), grads):
        assert grad.shape == param.shape
        flat = param.reshape(-1)
        for k in rng.choice(flat.size, size=min(12, flat.size), replace=False):
            old = flat[k]
            flat[k] = old + eps
            up = loss()
            flat[k] = old - eps
            down = loss()
            flat[k] = old
            numeric = (up - down) / (2 * eps)
            analytic = grad.reshape(-1)[k]
            assert abs(numeric - analytic) <= 1e-4 * max(abs(numeric), abs(analytic)) + 1e-7


def test_forward_shapes_and_validation():
    net = DenseNetwork.with_hidden(4, 8, 3, depth=2, seed=0)
    assert net.layer_sizes == [4, 8, 8, 3]
    assert net.forward(np.zeros(4)).shape == (3,)
    assert net.forward(np.zeros((5, 4))).shape == (5, 3)
    with pytest.raises(ValueError):
        net.forward(np.zeros(5))
    with pytest.raises(ValueError):
        DenseNetwork([4, 3], activations=["relu"])


def test_output_scale_shrinks_last_layer():
    plain = DenseNetwork.with_hidden(4, 8, 3, seed=2)
    small = DenseNetwork.with_hidden(4, 8, 3, seed=2, output_scale=0.01)
    assert np.allclose(small.weights[-1], 0.01 * plain.weights[-1])
    assert np.array_equal(small.weights[0], plain.weights[0])


def test_seeded_init_is_reproducible():
    a = DenseNetwork.with_hidden(6, 10, 2, seed=9)
    b = DenseNetwork.with_hidden(6, 10, 2, seed=9)
    c = DenseNetwork.with_hidden(6, 10, 2, seed=10)
    assert all(np.array_equal(p, q) for p, q in zip(a.parameters(), b.parameters()))
    assert not np.array_equal(a.weights[0], c.weights[0])


def test_blend_from():
    target = DenseNetwork.with_hidden(3, 4, 2, seed=0)
    online = DenseNetwork.with_hidden(3, 4, 2, seed=1)
    before = [p.copy() for p in target.parameters()]
    target.blend_from(online, 0.8)
    for t, o, b in zip(target.parameters(), online.parameters(), before):
        assert np.allclose(t, 0.2 * b + 0.8 * o)


def test_adam_first_step_and_convergence():
    p = np.array([1.0, -2.0])
    opt = AdamOptimizer([p], learning_rate=0.01)
    opt.step([2 * p])
    assert p == pytest.approx([0.99, -1.99], abs=1e-6)
    for _ in range(2000):
        opt.step([2 * p])
    assert np.abs(p).max() < 0.05


def test_adam_clipping():
    p = np.zeros(2)
    opt = AdamOptimizer([p], learning_rate=0.1, clip_norm=1.0)
    g = np.array([6.0, 8.0])
    assert global_norm([g]) == pytest.approx(10.0)
    assert opt.step([g]) == pytest.approx(10.0)
    assert opt.m[0] == pytest.approx(0.1 * g / 10.0)
    with pytest.raises(ValueError):
        opt.step([g, g])


def test_serialization_restores_exactly():
    net = DenseNetwork.with_hidden(5, 7, 3, seed=4)
    opt = AdamOptimizer(net.parameters(), learning_rate=0.01)
    x = np.random.default_rng(0).random((2, 5))
    out, cache = net.forward_cached(x)
    opt.step(net.backward(cache, np.ones_like(out)))

    data = json.loads(json.dumps(net.to_dict()))
    clone = DenseNetwork.from_dict(data)
    assert np.array_equal(clone.forward(x), net.forward(x))
    clone_opt = AdamOptimizer.from_dict(json.loads(json.dumps(opt.to_dict())), clone.parameters())
    assert clone_opt.step_count == 1
    assert all(np.array_equal(a, b) for a, b in zip(clone_opt.m, opt.m))
    assert clone.is_finite()
