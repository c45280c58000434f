import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lvsa import nn
from lvsa.errors import DimensionError


def numeric_grad(f, x, h=1e-5):
    g = np.zeros_like(x)
    it = np.nditer(x, flags=["multi_index"])
    for _ in it:
        i = it.multi_index
        old = x[i]
        x[i] = old + h
        up = f()
        x[i] = old - h
        down = f()
        x[i] = old
        g[i] = (up - down) / (2 * h)
    return g


def rel_err(a, b):
    return float(np.max(np.abs(a - b) / np.maximum(np.abs(a) + np.abs(b), 1e-8)))


class TestInit:
    def test_seeded(self):
        a, b = nn.mlp_init([4, 4, 2], seed=1), nn.mlp_init([4, 4, 2], seed=1)
        for x, y in zip(a.params(), b.params()):
            np.testing.assert_array_equal(x, y)

    def test_layer_count_and_biases(self):
        m = nn.mlp_init([3, 5, 5, 2], seed=0)
        assert m.num_layers == 3
        assert m.dims == [3, 5, 5, 2]
        assert all(not b.any() for b in m.biases)

    def test_weight_bound(self):
        m = nn.mlp_init([16, 4], seed=0)
        assert np.abs(m.weights[0]).max() <= 0.25

    @pytest.mark.parametrize("dims", [[4], [4, 0, 2]])
    def test_bad_dims(self, dims):
        with pytest.raises(DimensionError):
            nn.mlp_init(dims, seed=0)


class TestForward:
    def test_identity_layer(self, rng):
        m = nn.Mlp([np.eye(3)], [np.zeros(3)])
        x = rng.normal(size=3)
        np.testing.assert_array_equal(nn.forward(m, x), x)

    def test_leaky_relu(self):
        assert nn.leaky_relu(np.array(-1.0), 0.01) == pytest.approx(-0.01)

    def test_hand_two_layer(self):
        w0 = np.array([[1.0, 2.0], [-3.0, 0.5]])
        w1 = np.array([[1.0, -1.0], [2.0, 1.0]])
        m = nn.Mlp([w0, w1], [np.array([0.0, 1.0]), np.array([0.5, 0.0])])
        # hidden: z = (1, -2) -> leaky -> (1, -0.02); out = (1 + 0.02 + 0.5, 2 - 0.02)
        np.testing.assert_allclose(nn.forward(m, np.array([1.0, 0.0])), [1.52, 1.98], atol=1e-15)

    def test_width_mismatch(self):
        with pytest.raises(DimensionError):
            nn.forward(nn.mlp_init([3, 2], 0), np.zeros(4))

    def test_deterministic_batch(self, rng):
        m = nn.mlp_init([4, 4, 2], seed=2)
        x = rng.normal(size=(5, 4))
        np.testing.assert_array_equal(nn.forward(m, x), nn.forward(m, x))


class TestBackward:
    @pytest.mark.parametrize("dims", [[3, 4, 2], [8, 8, 8, 4], [2, 5]])
    def test_finite_differences(self, rng, dims):
        m = nn.mlp_init(dims, seed=3)
        for b in m.biases:
            b[:] = rng.normal(size=b.shape) * 0.1
        x = rng.normal(size=(4, dims[0]))
        up = rng.normal(size=(4, dims[-1]))

        def f():
            return float((nn.forward(m, x) * up).sum())

        gx, grads = nn.backward(m, x, up)
        assert rel_err(gx, numeric_grad(f, x)) < 1e-4
        for (gw, gb), w, b in zip(grads, m.weights, m.biases):
            assert rel_err(gw, numeric_grad(f, w)) < 1e-4
            assert rel_err(gb, numeric_grad(f, b)) < 1e-4

    def test_zero_upstream(self, rng):
        m = nn.mlp_init([3, 3, 2], seed=0)
        gx, grads = nn.backward(m, rng.normal(size=3), np.zeros(2))
        assert not gx.any()
        assert all(not gw.any() and not gb.any() for gw, gb in grads)

    def test_linear_layer_closed_form(self, rng):
        m = nn.mlp_init([3, 2], seed=0)
        x, up = rng.normal(size=3), rng.normal(size=2)
        _, [(gw, gb)] = nn.backward(m, x, up)
        np.testing.assert_allclose(gw, np.outer(up, x))
        np.testing.assert_array_equal(gb, up)

    def test_upstream_mismatch(self):
        m = nn.mlp_init([3, 2], seed=0)
        with pytest.raises(DimensionError):
            nn.backward(m, np.zeros(3), np.zeros(3))


class TestAdam:
    def test_zero_gradient_fixed_point(self):
        p = {"w": np.array([1.0, -2.0])}
        nn.adam_step(p, {"w": np.zeros(2)}, nn.AdamState(lr=0.1))
        np.testing.assert_array_equal(p["w"], [1.0, -2.0])

    @settings(max_examples=50)
    @given(st.lists(st.floats(1e-3, 1e3) | st.floats(-1e3, -1e-3), min_size=1, max_size=6))
    def test_first_step_is_lr_sign(self, g):
        g = np.array(g)
        p = {"w": np.zeros_like(g)}
        nn.adam_step(p, {"w": g}, nn.AdamState(lr=0.01))
        np.testing.assert_allclose(p["w"], -0.01 * np.sign(g), rtol=1e-4)

    def test_complex_parameters(self):
        p = {"z": np.array([1 + 1j])}
        nn.adam_step(p, {"z": np.array([1 - 1j])}, nn.AdamState(lr=0.1))
        assert p["z"][0] == pytest.approx(0.9 + 1.1j)

    def test_deterministic_trajectory(self, rng):
        grads = [rng.normal(size=3) for _ in range(5)]
        runs = []
        for _ in range(2):
            p, s = {"w": np.ones(3)}, nn.AdamState()
            for g in grads:
                nn.adam_step(p, {"w": g}, s)
            runs.append(p["w"])
        np.testing.assert_array_equal(*runs)

    def test_shape_mismatch(self):
        with pytest.raises(DimensionError):
            nn.adam_step({"w": np.zeros(2)}, {"w": np.zeros(3)}, nn.AdamState())
