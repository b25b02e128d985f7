import numpy as np
import pytest

from contrafit.contraction import (
    DesignConstants,
    FactorPolicy,
    contraction_bound,
    design_min_step,
    predicted_mse_floor,
    scalar_output_factor,
    step_factor,
)
from contrafit.core import ContractionViolationError, InvalidInputError, RngStream

RAW = FactorPolicy(mode="raw")
DUAL = FactorPolicy(mode="dual_normalized")


class TestFactorPolicy:
    def test_defaults(self):
        assert DUAL.floor == 1e-8 and DUAL.cap == 1e3

    def test_invalid_bounds(self):
        with pytest.raises(InvalidInputError):
            FactorPolicy(floor=0.0)
        with pytest.raises(InvalidInputError):
            FactorPolicy(floor=1.5)
        with pytest.raises(InvalidInputError):
            FactorPolicy(cap=0.5)
        with pytest.raises(InvalidInputError):
            FactorPolicy(mode="other")

    def test_cap_of_one_allowed(self):
        FactorPolicy(cap=1.0)


class TestStepFactor:
    def test_neutral_at_one(self):
        assert step_factor(1.0, 1.0, RAW) == 1.0

    def test_half_doubles(self):
        assert step_factor(0.5, 1.0, RAW) == 2.0

    def test_dual_normalization(self):
        # w_l1=0.5 over x_inf=2 gives a=0.25 and factor 4
        assert step_factor(0.5, 2.0, DUAL) == 4.0

    def test_zero_weights_hit_cap(self):
        assert step_factor(0.0, 1.0, RAW) == 1e3

    def test_bad_inputs(self):
        with pytest.raises(InvalidInputError):
            step_factor(1.0, 0.0, DUAL)
        with pytest.raises(InvalidInputError):
            step_factor(1.0, -1.0, DUAL)
        with pytest.raises(InvalidInputError):
            step_factor(-0.1, 1.0, RAW)

    def test_reciprocal_identity_on_grid(self):
        # 1 + (1-a)/a == 1/a pointwise over the working range
        grid = np.linspace(1e-8, 10.0, 10_000)
        wide = FactorPolicy(mode="raw", floor=1e-9, cap=1e9)
        for a in grid:
            assert abs(step_factor(float(a), 1.0, wide) - 1.0 / a) < 1e-12

    def test_monotone_nonincreasing_in_a(self):
        values = [step_factor(a, 1.0, RAW) for a in np.linspace(1e-8, 5.0, 500)]
        assert all(x >= y - 1e-15 for x, y in zip(values, values[1:]))

    def test_at_least_one_inside_unit_ball(self):
        for a in np.linspace(1e-6, 1.0, 200):
            assert step_factor(float(a), 1.0, RAW) >= 1.0


class TestScalarOutputFactor:
    def test_neutral(self):
        assert scalar_output_factor(1.0, 1.0, RAW) == 1.0

    def test_quarter(self):
        assert scalar_output_factor(0.25, 1.0, RAW) == 4.0

    def test_zero_hits_cap(self):
        assert scalar_output_factor(0.0, 1.0, RAW) == 1e3

    def test_dual(self):
        assert scalar_output_factor(0.5, 2.0, DUAL) == 4.0


class TestReciprocalNormConvexity:
    def test_random_pairs(self):
        # 1/l1(lam*w0 + (1-lam)*w1) >= 1/(lam*l1(w0) + (1-lam)*l1(w1))
        rng = RngStream(31)
        for _ in range(100):
            w0, w1 = rng.normal(6), rng.normal(6)
            lam = float(rng.uniform())
            mix = lam * w0 + (1 - lam) * w1
            denom_mix = np.sum(np.abs(mix))
            denom_convex = lam * np.sum(np.abs(w0)) + (1 - lam) * np.sum(np.abs(w1))
            if denom_mix > 1e-12:
                assert 1.0 / denom_mix >= 1.0 / denom_convex - 1e-12


class TestContractionBound:
    def test_basic(self):
        assert contraction_bound(0.5, 1.0, 1) == pytest.approx(1.0)

    def test_power(self):
        assert contraction_bound(0.5, 1.0, 2) == pytest.approx(0.5)

    def test_zero_norm(self):
        assert contraction_bound(0.0, 7.0, 3) == 0.0

    def test_violation(self):
        with pytest.raises(ContractionViolationError):
            contraction_bound(1.0, 1.0, 1)
        with pytest.raises(ContractionViolationError):
            contraction_bound(1.3, 1.0, 1)

    def test_monotone_in_m_and_t(self):
        assert contraction_bound(0.6, 1.0, 3) < contraction_bound(0.6, 1.0, 2)
        ts = np.linspace(0.05, 0.95, 50)
        vals = [contraction_bound(float(t), 1.0, 2) for t in ts]
        assert all(a < b for a, b in zip(vals, vals[1:]))


class TestDesignEquations:
    def test_min_step_exact(self):
        assert design_min_step(0.1, 100) == 1 / 900

    def test_min_step_single_iteration(self):
        assert design_min_step(0.5, 1) == 1.0

    def test_min_step_linear_in_k1(self):
        assert design_min_step(0.1, 100, DesignConstants(k1=2.0)) == 2 / 900

    def test_floor_exact(self):
        assert predicted_mse_floor(0.01, 0.1) == 0.09

    def test_floor_at_half(self):
        assert predicted_mse_floor(0.01, 0.5) == pytest.approx(0.01)

    def test_floor_decreasing_in_eps(self):
        eps = np.linspace(0.05, 0.999, 100)
        vals = [predicted_mse_floor(0.01, float(e)) for e in eps]
        assert all(a > b for a, b in zip(vals, vals[1:]))
        assert vals[-1] == pytest.approx(1.001e-5, rel=1e-2)

    def test_eps_range_errors(self):
        for eps in (0.0, 1.0, -0.5, 1.5):
            with pytest.raises(InvalidInputError):
                design_min_step(eps, 10)
            with pytest.raises(InvalidInputError):
                predicted_mse_floor(0.01, eps)

    def test_conflict_tradeoff(self):
        # a larger iteration budget allows a smaller step, which lowers the
        # predicted floor: the two goals trade off through mu
        k = DesignConstants()
        mu_a = design_min_step(0.1, 100, k)
        mu_b = design_min_step(0.1, 1000, k)
        assert mu_b < mu_a
        assert predicted_mse_floor(mu_b, 0.1, k) < predicted_mse_floor(mu_a, 0.1, k)
