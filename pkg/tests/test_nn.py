import numpy as np
import pytest

from procemu.nn import (
    MLP,
    AdamState,
    Dense,
    LSTMCell,
    Param,
    adam_update,
    cross_entropy_from_logits,
    dense_backward,
    dense_forward,
    log_softmax,
    lr_schedule,
    lstm_cell_step,
    relu,
    relu_backward,
    sigmoid,
    softmax,
    softmax_backward,
)
from procemu.nn.checkpoint import load_checkpoint, params_digest, save_checkpoint

from .gradcheck import check_param_grads, numeric_grad, rel_error


def test_dense_trivial_cases():
    x = np.array([1.0, -2.0, 3.0])
    b = np.array([0.5, 0.25, -1.0])
    y, _ = dense_forward(np.zeros((3, 3)), b, x)
    np.testing.assert_array_equal(y, b)
    y, _ = dense_forward(np.eye(3), np.zeros(3), x)
    np.testing.assert_array_equal(y, x)
    with pytest.raises(ValueError):
        dense_forward(np.eye(3), np.zeros(2), x)


@pytest.mark.parametrize("seed", range(5))
def test_dense_gradients(seed):
    rng = np.random.default_rng(seed)
    n_in, n_out, batch = rng.integers(1, 7, size=3)
    W, b, x = rng.normal(size=(n_out, n_in)), rng.normal(size=n_out), rng.normal(size=(batch, n_in))
    g = rng.normal(size=(batch, n_out))  # loss = sum(g * y)
    loss = lambda: float(np.sum(g * dense_forward(W, b, x)[0]))
    dW, db, dx = dense_backward(g, W, x)
    assert rel_error(dW, numeric_grad(loss, W)) < 1e-6
    assert rel_error(db, numeric_grad(loss, b)) < 1e-6
    assert rel_error(dx, numeric_grad(loss, x)) < 1e-6


def test_relu_cases_and_gradient():
    np.testing.assert_array_equal(relu(-np.arange(1.0, 5.0)), np.zeros(4))
    x = np.arange(1.0, 5.0)
    np.testing.assert_array_equal(relu(x), x)
    assert relu_backward(np.ones(1), np.zeros(1))[0] == 0.0
    rng = np.random.default_rng(0)
    x = rng.normal(size=20)
    x[np.abs(x) < 0.05] = 0.5  # stay away from the kink
    g = rng.normal(size=20)
    assert rel_error(relu_backward(g, x), numeric_grad(lambda: float(g @ relu(x)), x)) < 1e-6


def test_softmax_cases():
    np.testing.assert_allclose(softmax(np.full(5, 3.3)), np.full(5, 0.2), atol=1e-15)
    np.testing.assert_allclose(softmax(np.array([0.0, np.log(3.0)])), [0.25, 0.75], atol=1e-15)
    rng = np.random.default_rng(1)
    x = rng.normal(size=(4, 6))
    np.testing.assert_allclose(softmax(x + 123.4), softmax(x), atol=1e-12)
    assert np.all(np.abs(softmax(x).sum(axis=-1) - 1) < 1e-12)
    np.testing.assert_allclose(np.exp(log_softmax(x)), softmax(x), atol=1e-15)


def test_softmax_backward():
    rng = np.random.default_rng(2)
    x, g = rng.normal(size=7), rng.normal(size=7)
    p = softmax(x)
    assert rel_error(softmax_backward(g, p), numeric_grad(lambda: float(g @ softmax(x)), x)) < 1e-6


@pytest.mark.parametrize("seed", range(5))
def test_softmax_cross_entropy_head_gradient(seed):
    rng = np.random.default_rng(seed)
    logits = rng.normal(size=(3, 5))
    t = rng.dirichlet(np.ones(5), size=3)
    _, d = cross_entropy_from_logits(logits, t)
    assert rel_error(d, numeric_grad(lambda: cross_entropy_from_logits(logits, t)[0], logits)) < 1e-6


def test_stability_large_inputs():
    x = np.array([-1e3, 0.0, 1e3])
    for y in (softmax(x), log_softmax(x), sigmoid(x), np.tanh(x), relu(x)):
        assert np.all(np.isfinite(y))
    loss, d = cross_entropy_from_logits(x[None, :], np.array([[1.0, 0.0, 0.0]]))
    assert np.isfinite(loss) and np.all(np.isfinite(d))
    # the -1e3 logit sits below the floor: loss is capped at -log(1e-12)
    assert loss == pytest.approx(-np.log(1e-12))


def test_lstm_zero_weights():
    H = 4
    h, c, _ = lstm_cell_step(np.zeros((4 * H, 3)), np.zeros((4 * H, H)), np.zeros(4 * H),
                             np.ones(3), np.zeros(H), np.zeros(H))
    # gates are 0.5, candidate tanh(0) = 0, so c = 0.5*0 + 0.5*0 = 0 and h = 0.5*tanh(0) = 0
    np.testing.assert_array_equal(h, np.zeros(H))
    np.testing.assert_array_equal(c, np.zeros(H))
    assert h.shape == c.shape == (H,)


@pytest.mark.parametrize("seed", range(6))
def test_lstm_gradients_all_weight_groups(seed):
    rng = np.random.default_rng(seed)
    n_in, H, batch = rng.integers(1, 6), rng.integers(1, 6), rng.integers(1, 4)
    cell = LSTMCell(n_in, H, rng)
    x, h0, c0 = rng.normal(size=(batch, n_in)), rng.normal(size=(batch, H)), rng.normal(size=(batch, H))
    gh, gc = rng.normal(size=(batch, H)), rng.normal(size=(batch, H))

    def loss():
        h, c, _ = cell.forward(x, h0, c0)
        return float(np.sum(gh * h) + np.sum(gc * c))

    _, _, cache = cell.forward(x, h0, c0)
    dx, dh, dc = cell.backward(gh, gc, cache)
    check_param_grads(loss, cell.params, tol=1e-5)
    assert rel_error(dx, numeric_grad(loss, x)) < 1e-5
    assert rel_error(dh, numeric_grad(loss, h0)) < 1e-5
    assert rel_error(dc, numeric_grad(loss, c0)) < 1e-5


@pytest.mark.parametrize("seed", range(4))
def test_mlp_gradients(seed):
    rng = np.random.default_rng(seed)
    sizes = list(rng.integers(2, 7, size=rng.integers(2, 5)))
    net = MLP(sizes, rng)
    x = rng.normal(size=(3, sizes[0]))
    g = rng.normal(size=(3, sizes[-1]))
    loss = lambda: float(np.sum(g * net.forward(x)[0]))
    _, cache = net.forward(x)
    dx = net.backward(g, cache)
    check_param_grads(loss, net.params, tol=1e-5)
    assert rel_error(dx, numeric_grad(loss, x)) < 1e-5


def test_init_bounds():
    rng = np.random.default_rng(0)
    layer = Dense(16, 8, rng)
    assert np.max(np.abs(layer.W.values)) <= 0.25
    assert np.max(np.abs(layer.b.values)) <= 0.25


def test_adam_zero_gradient():
    p = Param("w", np.array([1.0, -2.0]))
    state = AdamState()
    adam_update([p], state, lr=0.01)
    np.testing.assert_array_equal(p.values, [1.0, -2.0])
    assert state.t == 1


def test_adam_first_step_is_sign():
    rng = np.random.default_rng(3)
    g = rng.normal(size=10)
    p = Param("w", np.zeros(10), grad=g.copy())
    adam_update([p], AdamState(), lr=0.01)
    delta = p.values
    assert np.all(np.sign(delta) == -np.sign(g))
    assert np.all((np.abs(delta) >= 0.99 * 0.01) & (np.abs(delta) <= 0.01))


def test_adam_deterministic():
    def run():
        rng = np.random.default_rng(11)
        p = Param("w", rng.normal(size=(3, 3)))
        s = AdamState()
        for _ in range(5):
            p.grad = rng.normal(size=(3, 3))
            adam_update([p], s, lr=0.01)
        return p.values, s

    (a, sa), (b, sb) = run(), run()
    assert a.tobytes() == b.tobytes()
    assert sa.t == sb.t == 5 and np.all(sa.v["w"] >= 0)


def test_lr_schedule():
    assert lr_schedule(0) == 0.01
    assert lr_schedule(3) == pytest.approx(0.01 * 0.95**3)
    assert lr_schedule(200, every=100) == pytest.approx(0.01 * 0.95**2)


def test_checkpoint_round_trip_bit_exact(tmp_path):
    rng = np.random.default_rng(4)
    net = MLP([3, 5, 2], rng, name="m")
    save_checkpoint(tmp_path / "ck", net.params, hyper={"lr": 0.01}, seed=9)
    other = MLP([3, 5, 2], np.random.default_rng(99), name="m")
    manifest = load_checkpoint(tmp_path / "ck", other.params)
    assert manifest["seed"] == 9 and manifest["hyper"] == {"lr": 0.01}
    for a, b in zip(net.params, other.params):
        assert a.values.tobytes() == b.values.tobytes()
    assert params_digest(net.params) == params_digest(other.params)
    raw = (tmp_path / "ck" / "m.0.W.f64").read_bytes()
    assert raw == np.asarray(net.params[0].values, dtype="<f8").tobytes()


def test_checkpoint_shape_mismatch(tmp_path):
    from procemu.errors import CheckpointMismatch

    save_checkpoint(tmp_path / "ck", MLP([3, 5, 2], np.random.default_rng(0), name="m").params)
    with pytest.raises(CheckpointMismatch):
        load_checkpoint(tmp_path / "ck", MLP([3, 4, 2], np.random.default_rng(0), name="m").params)
