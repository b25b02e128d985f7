"""Gaussian-kernel LMS in the growing-sum form, its scalar recursive
rewrite, and the output-scaled variant.

The sum form stores every seen input as a kernel center with coefficient
``mu * e``; prediction is the kernel expansion over the stored centers. The
recursive form keeps only a scalar running output and the previous input,
updating ``y`` by ``mu * e * k(x_prev, x)``. The two are not algebraically
equivalent; the sum form is the default and the recursive form is kept as a
comparison option.
"""

import numpy as np

from .contraction import FactorPolicy, scalar_output_factor
from .core import (
    DivergenceError,
    InvalidInputError,
    LabeledSample,
    PreconditionError,
)

_GROW = 256  # center buffer growth quantum


def gaussian_kernel(a, b, sigma: float) -> float:
    """``exp(-||a - b||^2 / sigma)`` for equal-length vectors."""
    av = np.asarray(a, dtype=float)
    bv = np.asarray(b, dtype=float)
    if av.shape != bv.shape:
        raise InvalidInputError(
            f"gaussian_kernel: dim mismatch {av.shape} vs {bv.shape}"
        )
    if not sigma > 0:
        raise InvalidInputError(f"gaussian_kernel: sigma must be positive, got {sigma}")
    d = av - bv
    return float(np.exp(-float(d @ d) / sigma))


class KlmsModel:
    """Kernel LMS model with a growing center list.

    Parameters
    ----------
    dim: input dimension
    sigma: Gaussian kernel width (the squared distance is divided by sigma)
    mu: step size
    policy: optional FactorPolicy; enables output-scaled coefficients
    variant: "sum" (kernel expansion, default) or "recursive" (scalar output)
    max_centers: optional FIFO bound on the stored centers
    """

    def __init__(
        self,
        dim,
        sigma=1.0,
        mu=0.5,
        policy: FactorPolicy | None = None,
        variant="sum",
        max_centers=None,
    ):
        if not sigma > 0:
            raise InvalidInputError(f"KlmsModel: sigma must be positive, got {sigma}")
        if not mu > 0:
            raise InvalidInputError(f"KlmsModel: mu must be positive, got {mu}")
        if variant not in ("sum", "recursive"):
            raise InvalidInputError(f"KlmsModel: unknown variant {variant!r}")
        self.dim = int(dim)
        self.sigma = float(sigma)
        self.mu = float(mu)
        self.policy = policy
        self.variant = variant
        self.max_centers = max_centers
        self.steps_taken = 0
        self.last_factor = 1.0
        self._cbuf = np.empty((_GROW, self.dim))
        self._abuf = np.empty(_GROW)
        self._n = 0
        self._start = 0  # FIFO eviction moves the window start forward
        # recursive-variant state
        self._y_run = 0.0
        self._x_prev = None

    # -- storage ------------------------------------------------------------

    @property
    def centers(self) -> np.ndarray:
        return self._cbuf[self._start : self._n]

    @property
    def coeffs(self) -> np.ndarray:
        return self._abuf[self._start : self._n]

    @property
    def l1(self) -> float:
        return float(np.sum(np.abs(self.coeffs)))

    def _append(self, x, coeff):
        if self._n == self._cbuf.shape[0]:
            self._cbuf = np.concatenate(
                [self._cbuf, np.empty((_GROW, self.dim))], axis=0
            )
            self._abuf = np.concatenate([self._abuf, np.empty(_GROW)])
        self._cbuf[self._n] = x
        self._abuf[self._n] = coeff
        self._n += 1
        if self.max_centers is not None and self._n - self._start > self.max_centers:
            self._start += 1

    # -- prediction ----------------------------------------------------------

    def _kernel_row(self, x):
        d = self.centers - x
        return np.exp(-np.einsum("ij,ij->i", d, d) / self.sigma)

    def predict_one(self, x) -> float:
        x = np.asarray(x, dtype=float)
        if x.size != self.dim:
            raise InvalidInputError(f"KlmsModel: dim mismatch {x.size} vs {self.dim}")
        if self.variant == "recursive":
            return self._y_run
        if self._n == self._start:
            return 0.0
        return float(self._kernel_row(x) @ self.coeffs)

    def predict(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if self.variant == "recursive":
            return np.full(X.shape[0], self._y_run)
        if self._n == self._start:
            return np.zeros(X.shape[0])
        c = self.centers
        sq = (
            np.sum(X * X, axis=1)[:, None]
            - 2.0 * X @ c.T
            + np.sum(c * c, axis=1)[None, :]
        )
        np.maximum(sq, 0.0, out=sq)
        return np.exp(-sq / self.sigma) @ self.coeffs

    def step(self, sample: LabeledSample):
        if self.variant == "recursive":
            if self._x_prev is None:
                # seed: record the first input, output stays at 0
                y = self._y_run
                e = sample.t - y
                self._x_prev = sample.x.copy()
                self.steps_taken += 1
                self.last_factor = 1.0
                return y, e
            return klms_step_recursive(self, sample)[1:]
        return klms_update(self, sample)[1:]


def klms_predict(model: KlmsModel, x) -> float:
    """Kernel expansion output ``sum_i coeffs[i] * k(centers[i], x)``;
    an empty model returns 0."""
    return model.predict_one(x)


def klms_update(model: KlmsModel, sample: LabeledSample):
    """Sum-form update: append the input as a center with coefficient
    ``mu * e`` (scaled variant: ``f * mu * e`` with f from the output
    magnitude). Returns ``(model, prediction, error)``.
    """
    x = sample.x
    if x.size != model.dim:
        raise InvalidInputError(f"klms_update: dim mismatch {x.size} vs {model.dim}")
    y = model.predict_one(x)
    e = sample.t - y
    f = 1.0
    if model.policy is not None and model._n > model._start:
        x_inf = float(np.max(np.abs(x)))
        if x_inf > 0.0:
            f = scalar_output_factor(abs(y), x_inf, model.policy)
    coeff = f * model.mu * e
    if not np.isfinite(coeff):
        raise DivergenceError("klms_update: non-finite coefficient")
    model._append(x, coeff)
    model.steps_taken += 1
    model.last_factor = f
    return model, y, e


def klms_step_recursive(model: KlmsModel, sample: LabeledSample):
    """Recursive-form update of the scalar running output:
    ``y += mu * e * k(x_prev, x)``. Requires one prior sample."""
    if model._x_prev is None:
        raise PreconditionError("klms_step_recursive: no prior sample seen")
    x = sample.x
    if x.size != model.dim:
        raise InvalidInputError(
            f"klms_step_recursive: dim mismatch {x.size} vs {model.dim}"
        )
    y = model._y_run
    e = sample.t - y
    f = 1.0
    if model.policy is not None:
        x_inf = float(np.max(np.abs(x)))
        if x_inf > 0.0:
            f = scalar_output_factor(abs(y), x_inf, model.policy)
    y_new = y + f * model.mu * e * gaussian_kernel(model._x_prev, x, model.sigma)
    if not np.isfinite(y_new):
        raise DivergenceError("klms_step_recursive: non-finite output")
    model._y_run = y_new
    model._x_prev = x.copy()
    model.steps_taken += 1
    model.last_factor = f
    return model, y, e
