import numpy as np

from unitax.mlp import Adam, MlpModel
from unitax.rng import SplitMix64


def tiny_model(seed=0, sizes=(2, 4, 3, 2)):
    return MlpModel(list(sizes), SplitMix64(seed))


def test_zero_parameters_give_zero_logits():
    model = tiny_model()
    for w in model.weights:
        w[:] = 0.0
    for b in model.biases:
        b[:] = 0.0
    x = np.random.default_rng(0).normal(size=(5, 2))
    assert np.all(model.forward(x) == 0.0)


def test_output_width_matches_last_layer():
    model = tiny_model(sizes=(2, 8, 8, 7))
    out = model.forward(np.zeros((3, 2)))
    assert out.shape == (3, 7)


def test_same_seed_same_init():
    a, b = tiny_model(3), tiny_model(3)
    for wa, wb in zip(a.weights, b.weights):
        assert np.array_equal(wa, wb)


def test_parameter_gradients_match_finite_differences():
    rng = np.random.default_rng(1)
    model = tiny_model(5)
    x = rng.normal(size=(6, 2))
    target = rng.normal(size=(6, 2))

    def loss_value():
        out = model.forward(x)
        return 0.5 * float(np.sum((out - target) ** 2))

    cache = []
    out = model.forward(x, cache)
    grads_w, grads_b = model.backward(cache, out - target)

    step = 1e-6
    params = model.weights + model.biases
    grads = grads_w + grads_b
    for p, g in zip(params, grads):
        flat_p = p.reshape(-1)
        flat_g = g.reshape(-1)
        for i in range(flat_p.size):
            keep = flat_p[i]
            flat_p[i] = keep + step
            up = loss_value()
            flat_p[i] = keep - step
            down = loss_value()
            flat_p[i] = keep
            fd = (up - down) / (2 * step)
            assert abs(flat_g[i] - fd) / max(abs(fd), 1e-6) < 1e-4


def test_serialization_round_trip():
    model = tiny_model(8)
    clone = MlpModel.from_dict(model.to_dict())
    x = np.random.default_rng(2).normal(size=(4, 2))
    assert np.array_equal(model.forward(x), clone.forward(x))


def test_adam_reduces_quadratic_loss():
    rng = SplitMix64(0)
    model = tiny_model(9)
    x = np.random.default_rng(3).normal(size=(32, 2))
    target = np.random.default_rng(4).normal(size=(32, 2))
    opt = Adam(model.parameters(), lr=1e-2)
    first = None
    for _ in range(200):
        cache = []
        out = model.forward(x, cache)
        loss = 0.5 * float(np.mean((out - target) ** 2))
        if first is None:
            first = loss
        gw, gb = model.backward(cache, (out - target) / len(x))
        opt.step(gw + gb)
    assert loss < first * 0.5
