import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rlprng import neural as N


def loss_and_upstream(net, x, w):
    """Scalar probe sum(w * f(x)) and its upstream gradient."""
    return float(np.sum(w * net(x))), w


def fd_gradients(net, x, w, eps=1e-5):
    out = []
    for p in net.params:
        g = np.zeros_like(p)
        for idx in np.ndindex(p.shape):
            old = p[idx]
            p[idx] = old + eps
            up = float(np.sum(w * net(x)))
            p[idx] = old - eps
            down = float(np.sum(w * net(x)))
            p[idx] = old
            g[idx] = (up - down) / (2 * eps)
        out.append(g)
    return out


def max_rel_error(a, b, floor=1e-6):
    return max(float(np.max(np.abs(x - y) / np.maximum(np.maximum(np.abs(x), np.abs(y)), floor)))
               for x, y in zip(a, b))


def gradient_check(head, seed, activation="tanh"):
    rng = np.random.default_rng(seed)
    dims = [5, 7, 6, 4]
    net = N.DenseNetwork.xavier(dims, rng, head, activation)
    for p in net.params:
        if p.ndim == 1:
            p[...] = rng.normal(0, 0.1, p.shape)
    x = rng.normal(size=(3, 5))
    w = rng.normal(size=(3, 4))
    analytic = net.backward(x, w)
    return max_rel_error(analytic, fd_gradients(net, x, w))


@pytest.mark.parametrize("head", ["linear", "softmax", "dueling"])
@pytest.mark.parametrize("seed", range(5))
def test_gradients_match_finite_differences(head, seed):
    assert gradient_check(head, seed, "tanh") < 1e-4
    assert gradient_check(head, seed, "relu") < 1e-4


def test_logit_upstream_matches_softmax_chain_rule():
    rng = np.random.default_rng(0)
    net = N.DenseNetwork.xavier([4, 8, 3], rng, "softmax")
    x = rng.normal(size=(5, 4))
    out, cache = net.forward_cache(x)
    w = rng.normal(size=(5, 3))
    # gradient w.r.t. logits of sum(w * softmax) is p * (w - <p, w>)
    g_logits = out * (w - np.sum(out * w, axis=1, keepdims=True))
    a = net.backward(x, w, cache)
    b = net.backward(x, g_logits, cache, upstream_is_logits=True)
    for u, v in zip(a, b):
        np.testing.assert_allclose(u, v, atol=1e-12)


def test_zero_upstream_and_linearity():
    rng = np.random.default_rng(1)
    net = N.DenseNetwork.xavier([3, 5, 2], rng, "dueling")
    x = rng.normal(size=(4, 3))
    assert all(not g.any() for g in net.backward(x, np.zeros((4, 2))))
    w = rng.normal(size=(4, 2))
    g1 = net.backward(x, w)
    g2 = net.backward(x, 2.5 * w)
    for a, b in zip(g1, g2):
        np.testing.assert_allclose(2.5 * a, b, atol=1e-12)


def test_xavier_moments():
    rng = np.random.default_rng(0)
    w = np.concatenate([N.DenseNetwork.xavier([4, 4], rng).params[0].ravel()
                        for _ in range(6250)])
    assert w.size == 100_000
    assert w.var() == pytest.approx(2 / 8, rel=0.05)
    net = N.DenseNetwork.xavier([4, 6, 3], rng, "dueling")
    assert all(not p.any() for p in net.params if p.ndim == 1)


def test_xavier_deterministic():
    a = N.DenseNetwork.xavier([4, 6, 3], np.random.default_rng(3))
    b = N.DenseNetwork.xavier([4, 6, 3], np.random.default_rng(3))
    assert a.fingerprint() == b.fingerprint()


def test_zero_weight_outputs():
    x = np.ones((2, 3))
    assert not N.DenseNetwork([3, 4, 2], "linear")(x).any()
    np.testing.assert_allclose(N.DenseNetwork([3, 4, 5], "softmax")(x), 0.2)


def test_dueling_mean_centering():
    net = N.DenseNetwork([1, 1, 3], "dueling", "relu")
    # zero hidden output, advantages from the bias only
    net.params[-1][...] = [1.0, 2.0, 3.0]
    np.testing.assert_allclose(net(np.zeros(1)), [[-1.0, 0.0, 1.0]])


def test_shape_errors():
    net = N.DenseNetwork([3, 2])
    with pytest.raises(N.ShapeError):
        net(np.ones(4))
    with pytest.raises(N.ShapeError):
        net.backward(np.ones((1, 3)), np.ones((1, 3)))
    with pytest.raises(N.ShapeError):
        N.DenseNetwork([3, 2], params=[np.zeros((2, 3)), np.zeros(2)])


def test_non_finite_output_raises():
    net = N.DenseNetwork([1, 1])
    net.params[0][...] = np.inf
    with pytest.raises(N.NumericError):
        net(np.ones(1))


def test_adam_zero_gradient_and_descent():
    p = [np.array([1.0])]
    opt = N.Adam([(1,)], lr=0.1)
    opt.step(p, [np.array([0.4])])
    m_before = opt.m[0].copy()
    p_before = p[0].copy()
    opt.step(p, [np.zeros(1)])
    assert opt.m[0][0] == pytest.approx(0.9 * m_before[0])
    # the first moment still moves the parameter; with fresh state it does not
    fresh = N.Adam([(1,)], lr=0.1)
    q = [p_before.copy()]
    fresh.step(q, [np.zeros(1)])
    assert q[0][0] == p_before[0]
    w = [np.array([1.0])]
    opt = N.Adam([(1,)], lr=0.1)
    opt.step(w, [2 * w[0]])
    assert abs(w[0][0]) < 1.0


def test_adam_converges_on_quadratic():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(5, 5))
    H = A @ A.T + np.eye(5)
    target = rng.normal(size=5)
    w = [np.zeros(5)]
    opt = N.Adam([(5,)], lr=0.05)
    for i in range(10_000):
        d = w[0] - target
        loss = 0.5 * d @ H @ d
        if loss < 1e-6:
            break
        opt.step(w, [H @ d], lr=0.05 / (1 + i / 500))
    assert loss < 1e-6


def test_checkpoint_round_trip_bit_identical(tmp_path):
    rng = np.random.default_rng(0)
    net = N.DenseNetwork.xavier([80, 2048, 2048, 2048, 2048, 2048, 2048, 160], rng,
                                "dueling")
    path = tmp_path / "big.ckpt"
    N.save_checkpoint(net, path)
    back = N.load_checkpoint(path)
    assert back.dims == net.dims and back.head == "dueling"
    assert all(np.array_equal(a, b) for a, b in zip(net.params, back.params))


def test_checkpoint_keeps_optimizer_and_metadata():
    rng = np.random.default_rng(1)
    net = N.DenseNetwork.xavier([3, 4, 2], rng, "softmax", "tanh")
    opt = N.Adam.for_network(net, 0.01)
    opt.step(net.params, net.backward(np.ones((1, 3)), np.ones((1, 2))))
    blob = N.dumps_checkpoint(net, opt, {"episodes": 7})
    net2, opt2, meta = N.loads_checkpoint(blob)
    assert meta == {"episodes": 7} and opt2.t == 1 and opt2.lr == 0.01
    assert all(np.array_equal(a, b) for a, b in zip(opt.v, opt2.v))
    assert net2.activation == "tanh"


def test_truncated_checkpoint_is_integrity_error():
    blob = N.dumps_checkpoint(N.DenseNetwork([3, 2]))
    for cut in (0, 5, len(blob) // 2, len(blob) - 1):
        with pytest.raises(N.IntegrityError):
            N.loads_checkpoint(blob[:cut])


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_any_single_byte_corruption_is_detected(data):
    net = N.DenseNetwork.xavier([3, 4, 2], np.random.default_rng(0))
    blob = bytearray(N.dumps_checkpoint(net))
    i = data.draw(st.integers(0, len(blob) - 1))
    blob[i] ^= data.draw(st.integers(1, 255))
    with pytest.raises(N.IntegrityError):
        N.loads_checkpoint(bytes(blob))
