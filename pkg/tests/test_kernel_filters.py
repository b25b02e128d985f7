import math

import numpy as np
import pytest

from contrafit.contraction import FactorPolicy
from contrafit.core import (
    DivergenceError,
    InvalidInputError,
    LabeledSample,
    PreconditionError,
    RngStream,
)
from contrafit.kernel_filters import (
    KlmsModel,
    gaussian_kernel,
    klms_predict,
    klms_step_recursive,
    klms_update,
)

RAW = FactorPolicy(mode="raw")


def sample(x, t):
    return LabeledSample(x=np.asarray(x, dtype=float), t=t)


class TestGaussianKernel:
    def test_identical_points(self):
        assert gaussian_kernel([1.0, 2.0], [1.0, 2.0], sigma=3.0) == 1.0

    def test_distance_equal_to_sigma(self):
        # squared distance equals sigma -> exp(-1)
        assert gaussian_kernel([0.0], [2.0], sigma=4.0) == pytest.approx(
            math.exp(-1.0), abs=1e-12
        )

    def test_symmetry(self):
        rng = RngStream(41)
        for _ in range(30):
            a, b = rng.normal(4), rng.normal(4)
            assert gaussian_kernel(a, b, 1.7) == gaussian_kernel(b, a, 1.7)

    def test_dim_mismatch(self):
        with pytest.raises(InvalidInputError):
            gaussian_kernel([1.0], [1.0, 2.0], 1.0)

    def test_gram_matrix_positive_semidefinite(self):
        rng = RngStream(43)
        for sigma in (0.5, 1.0, 4.0):
            pts = rng.normal(20 * 3).reshape(20, 3)
            gram = np.array(
                [[gaussian_kernel(p, q, sigma) for q in pts] for p in pts]
            )
            assert np.max(np.abs(gram - gram.T)) == 0.0
            assert np.min(np.linalg.eigvalsh(gram)) >= -1e-10


class TestKlmsPredict:
    def test_empty_model_outputs_zero(self):
        model = KlmsModel(dim=3)
        assert klms_predict(model, [1.0, 2.0, 3.0]) == 0.0

    def test_single_center_at_query(self):
        model = KlmsModel(dim=2, mu=0.2)
        klms_update(model, sample([1.0, -1.0], 1.0))  # coeff = mu * t = 0.2
        assert klms_predict(model, [1.0, -1.0]) == pytest.approx(0.2)

    def test_matches_bruteforce_sum(self):
        rng = RngStream(47)
        model = KlmsModel(dim=4, sigma=1.5, mu=0.3)
        for _ in range(15):
            klms_update(model, sample(rng.normal(4), float(rng.normal())))
        x = rng.normal(4)
        brute = sum(
            c * gaussian_kernel(ctr, x, model.sigma)
            for ctr, c in zip(model.centers, model.coeffs)
        )
        assert klms_predict(model, x) == pytest.approx(brute, abs=1e-12)

    def test_batch_predict_matches_single(self):
        rng = RngStream(48)
        model = KlmsModel(dim=3, sigma=2.0, mu=0.5)
        for _ in range(10):
            klms_update(model, sample(rng.normal(3), float(rng.normal())))
        X = rng.normal(5 * 3).reshape(5, 3)
        batch = model.predict(X)
        singles = [model.predict_one(x) for x in X]
        assert np.allclose(batch, singles, atol=1e-12)

    def test_linear_in_coefficients(self):
        rng = RngStream(49)
        m1 = KlmsModel(dim=2, sigma=1.0, mu=0.4)
        for _ in range(8):
            klms_update(m1, sample(rng.normal(2), float(rng.normal())))
        x = rng.normal(2)
        y1 = m1.predict_one(x)
        m1._abuf[: m1._n] *= 2.0  # doubling coefficients doubles the output
        assert m1.predict_one(x) == pytest.approx(2.0 * y1, abs=1e-12)


class TestKlmsUpdate:
    def test_first_update(self):
        model = KlmsModel(dim=2, mu=0.1)
        model, y, e = klms_update(model, sample([1.0, 0.0], 1.0))
        assert y == 0.0 and e == 1.0
        assert len(model.centers) == 1
        assert model.coeffs[0] == pytest.approx(0.1)

    def test_neutral_at_unit_output(self):
        # craft |y| == 1 in raw mode: coefficient equals the baseline one
        base = KlmsModel(dim=1, mu=0.1)
        mod = KlmsModel(dim=1, mu=0.1, policy=RAW)
        for m in (base, mod):
            klms_update(m, sample([0.0], 1.0))
            m._abuf[0] = 1.0  # center at 0 with unit coefficient -> y(0) = 1
        s = sample([0.0], 1.3)
        _, yb, eb = klms_update(base, s)
        _, ym, em = klms_update(mod, s)
        assert yb == ym == 1.0
        assert mod.last_factor == 1.0
        assert mod.coeffs[-1] == base.coeffs[-1]

    def test_modified_coefficient_oracle(self):
        # |y| = 0.5 raw -> f = 2; coeff = 2 * 0.1 * 0.2 = 0.04
        model = KlmsModel(dim=2, mu=0.1, policy=RAW)
        klms_update(model, sample([1.0, 1.0], 0.0))
        model._abuf[0] = 0.5  # prediction at the stored center is 0.5
        model, y, e = klms_update(model, sample([1.0, 1.0], 0.7))
        assert y == pytest.approx(0.5)
        assert e == pytest.approx(0.2)
        assert model.last_factor == pytest.approx(2.0)
        assert model.coeffs[-1] == pytest.approx(0.04, abs=1e-15)

    def test_growth_one_center_per_update(self):
        rng = RngStream(53)
        model = KlmsModel(dim=3, mu=0.2)
        for n in range(1, 21):
            klms_update(model, sample(rng.normal(3), float(rng.normal())))
            assert len(model.centers) == n == len(model.coeffs)

    def test_fifo_eviction(self):
        model = KlmsModel(dim=1, mu=0.5, max_centers=3)
        for i in range(6):
            klms_update(model, sample([float(i)], 1.0))
        assert len(model.centers) == 3
        assert model.centers[:, 0].tolist() == [3.0, 4.0, 5.0]

    def test_divergent_coeff_raises(self):
        model = KlmsModel(dim=1, mu=0.1)
        klms_update(model, sample([0.0], 1.0))
        model._abuf[0] = np.inf
        with pytest.raises((DivergenceError, InvalidInputError)):
            klms_update(model, sample([0.0], 1.0))


class TestKlmsRecursive:
    def test_requires_prior_sample(self):
        model = KlmsModel(dim=2, variant="recursive")
        with pytest.raises(PreconditionError):
            klms_step_recursive(model, sample([1.0, 0.0], 1.0))

    def test_zero_error_keeps_output(self):
        model = KlmsModel(dim=1, mu=0.3, variant="recursive")
        model.step(sample([0.5], 0.0))  # seed, y stays 0
        model, y, e = klms_step_recursive(model, sample([0.5], 0.0))
        assert e == 0.0 and model._y_run == 0.0

    def test_repeated_input_increments_by_mu_e(self):
        model = KlmsModel(dim=1, mu=0.3, variant="recursive")
        model.step(sample([0.7], 0.0))
        model, y, e = klms_step_recursive(model, sample([0.7], 1.0))
        # kernel(x_prev, x) = 1, so y increases by mu * e
        assert model._y_run == pytest.approx(0.3 * 1.0)

    def test_three_step_trace_matches_hand_recursion(self):
        mu, sigma = 0.2, 1.5
        xs = [np.array([0.1]), np.array([0.5]), np.array([-0.4]), np.array([0.2])]
        ts = [0.0, 1.0, -1.0, 0.5]
        model = KlmsModel(dim=1, mu=mu, sigma=sigma, variant="recursive")
        model.step(sample(xs[0], ts[0]))  # seed
        # hand recursion: y <- y + mu*e*k(x_prev, x)
        y_hand = 0.0
        for prev, x, t in zip(xs, xs[1:], ts[1:]):
            e = t - y_hand
            y_hand = y_hand + mu * e * math.exp(-float((prev[0] - x[0]) ** 2) / sigma)
            klms_step_recursive(model, sample(x, t))
        assert model._y_run == pytest.approx(y_hand, abs=1e-12)
