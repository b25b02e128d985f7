import numpy as np
import pytest

from contrafit.contraction import FactorPolicy
from contrafit.core import Dataset, InvalidInputError, LabeledSample, RngStream, WeightState
from contrafit.linear_filters import LmsState, lms_step
from contrafit.neural import (
    Mlp,
    backprop_deltas,
    forward,
    train_epochs,
    train_step,
    update_weights,
)

RAW = FactorPolicy(mode="raw")


def sample(x, t):
    return LabeledSample(x=np.asarray(x, dtype=float), t=t)


def loop_forward(mlp, x):
    """Independent scalar-loop forward pass."""
    a = list(x)
    act = np.tanh if mlp.activation == "tanh" else (lambda z: z)
    for j, w in enumerate(mlp.layers):
        z = []
        for r in range(w.shape[0]):
            acc = mlp.biases[j][r] if mlp.biases is not None else 0.0
            for c in range(w.shape[1]):
                acc += w[r, c] * a[c]
            z.append(acc)
        a = z if j == len(mlp.layers) - 1 else [float(act(v)) for v in z]
    return a


def half_sq_cost(mlp, s):
    y = float(forward(mlp, s.x).activations[-1][0])
    return 0.5 * (s.t - y) ** 2


class TestForward:
    def test_single_identity_layer(self):
        mlp = Mlp([2, 1], activation="identity", use_bias=False)
        mlp.layers[0] = np.array([[1.0, 0.0]])
        trace = forward(mlp, [0.3, 7.0])
        assert trace.activations[-1][0] == pytest.approx(0.3)

    def test_zero_weights_zero_hidden(self):
        mlp = Mlp([3, 4, 1], activation="tanh", use_bias=False)
        for w in mlp.layers:
            w[:] = 0.0
        trace = forward(mlp, [1.0, -2.0, 0.5])
        assert np.all(trace.activations[1] == 0.0)

    def test_matches_loop_oracle(self):
        rng = RngStream(61)
        for _ in range(10):
            mlp = Mlp([2, 3, 1], activation="tanh", rng=RngStream(61, 1))
            x = rng.normal(2)
            trace = forward(mlp, x)
            assert np.allclose(trace.activations[-1], loop_forward(mlp, x), atol=1e-12)

    def test_batch_predict_matches_forward(self):
        mlp = Mlp([3, 5, 1], rng=RngStream(62))
        X = RngStream(63).normal(4 * 3).reshape(4, 3)
        batch = mlp.predict(X)
        singles = [forward(mlp, x).activations[-1][0] for x in X]
        assert np.allclose(batch, singles, atol=1e-12)

    def test_dim_mismatch(self):
        mlp = Mlp([3, 1])
        with pytest.raises(InvalidInputError):
            forward(mlp, [1.0, 2.0])


class TestBackprop:
    def test_zero_error_zero_deltas(self):
        mlp = Mlp([2, 3, 1], rng=RngStream(64))
        trace = forward(mlp, [0.4, -0.1])
        t = float(trace.activations[-1][0])  # hit the target exactly
        gw, gb = backprop_deltas(mlp, trace, t)
        assert all(np.allclose(g, 0.0) for g in gw)
        assert all(np.allclose(g, 0.0) for g in gb)

    def test_single_linear_neuron_reduces_to_lms_gradient(self):
        mlp = Mlp([3, 1], activation="identity", use_bias=False)
        mlp.layers[0] = np.array([[0.2, -0.1, 0.4]])
        x, t = np.array([1.0, 2.0, -0.5]), 0.7
        trace = forward(mlp, x)
        e = t - float(trace.activations[-1][0])
        gw, _ = backprop_deltas(mlp, trace, t)
        assert np.allclose(gw[0], e * x[None, :], atol=1e-12)

    def test_gradients_match_finite_differences(self):
        # central differences of the half-squared-error cost, h = 1e-6
        h = 1e-6
        checked = 0
        for case in range(20):
            mlp = Mlp([2, 4, 1], activation="tanh", rng=RngStream(65, case))
            s = sample(RngStream(66, case).normal(2), float(RngStream(67, case).normal()))
            trace = forward(mlp, s.x)
            gw, gb = backprop_deltas(mlp, trace, s.t)
            for j, w in enumerate(mlp.layers):
                for idx in np.ndindex(w.shape):
                    w[idx] += h
                    mlp._version += 1
                    up = half_sq_cost(mlp, s)
                    w[idx] -= 2 * h
                    mlp._version += 1
                    down = half_sq_cost(mlp, s)
                    w[idx] += h
                    mlp._version += 1
                    fd = (up - down) / (2 * h)  # = dJ/dw = -G
                    num, den = abs(fd + gw[j][idx]), max(abs(fd), abs(gw[j][idx]), 1e-8)
                    assert num / den < 1e-5
                    checked += 1
        assert checked >= 20

    def test_stale_trace_rejected(self):
        mlp = Mlp([2, 2, 1], rng=RngStream(68))
        trace = forward(mlp, [0.1, 0.2])
        grads = backprop_deltas(mlp, trace, 1.0)
        update_weights(mlp, grads, trace)
        with pytest.raises(InvalidInputError):
            backprop_deltas(mlp, trace, 1.0)


class TestUpdateWeights:
    def test_zero_gradients_keep_network(self):
        mlp = Mlp([2, 3, 1], rng=RngStream(70))
        before = [w.copy() for w in mlp.layers]
        trace = forward(mlp, [0.5, 0.5])
        t = float(trace.activations[-1][0])
        grads = backprop_deltas(mlp, trace, t)
        update_weights(mlp, grads, trace)
        assert all(np.array_equal(a, b) for a, b in zip(before, mlp.layers))

    def test_unit_norm_single_update_matches_baseline(self):
        # raw mode with every layer at l1 == 1: the next update is identical
        def normalized(policy):
            mlp = Mlp([2, 3, 1], mu=0.1, policy=policy, rng=RngStream(71))
            for w in mlp.layers:
                w /= np.sum(np.abs(w))
            mlp.steps_taken = 4
            return mlp

        base, mod = normalized(None), normalized(RAW)
        s = sample([0.3, -0.8], 1.0)
        train_step(base, s)
        train_step(mod, s)
        assert all(np.array_equal(a, b) for a, b in zip(base.layers, mod.layers))

    def test_one_layer_identity_net_equals_modified_lms(self):
        w0 = np.array([0.3, -0.2, 0.6])
        s = sample([1.0, 0.5, -1.5], 0.9)
        mlp = Mlp([3, 1], activation="identity", mu=0.05, policy=RAW, use_bias=False)
        mlp.layers[0] = w0[None, :].copy()
        mlp.steps_taken = 2
        lms = LmsState(
            weights=WeightState(w0.copy()), mu=0.05, policy=RAW, steps_taken=2
        )
        train_step(mlp, s)
        lms_step(lms, s)
        assert np.allclose(mlp.layers[0][0], lms.weights.w, atol=1e-14)


class TestTrainEpochs:
    def _toy(self, n=30, dim=3, seed=80):
        rng = RngStream(seed)
        w_true = np.array([0.5, -0.3, 0.2])
        samples = [
            sample(x := rng.normal(dim), float(w_true @ x)) for _ in range(n)
        ]
        return Dataset(train=samples[:-5], test=samples[-5:], dim=dim)

    def test_empty_train_rejected(self):
        ds = Dataset(train=[], test=[], dim=2)
        with pytest.raises(InvalidInputError):
            train_epochs(Mlp([2, 1]), ds, epochs=1)

    def test_one_epoch_one_sample_is_one_update(self):
        ds = Dataset(train=[sample([1.0, 0.0], 1.0)], test=[], dim=2)
        mlp_a = Mlp([2, 1], activation="identity", mu=0.1, rng=RngStream(81))
        mlp_b = mlp_a.copy()
        train_epochs(mlp_a, ds, epochs=1)
        train_step(mlp_b, ds.train[0])
        assert np.array_equal(mlp_a.layers[0], mlp_b.layers[0])

    def test_seeded_reproducibility(self):
        ds = self._toy()
        curves = []
        for _ in range(2):
            mlp = Mlp([3, 4, 1], mu=0.05, rng=RngStream(82))
            curves.append(train_epochs(mlp, ds, epochs=5, rng=RngStream(83)))
        assert np.array_equal(curves[0].train_mse, curves[1].train_mse)

    def test_cost_collapses_on_realizable_problem(self):
        # noiseless linear target: 100 epochs cut the cost below 1% of start
        ds = self._toy(n=60, seed=84)
        mlp = Mlp([3, 4, 1], activation="tanh", mu=0.05, rng=RngStream(85))
        curve = train_epochs(mlp, ds, epochs=100, rng=RngStream(86))
        assert curve.train_mse[-1] < 0.01 * curve.train_mse[0]
