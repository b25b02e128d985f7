"""Online linear learners: LMS and RLS, each with an optional
contraction-scaled update, plus the generic online training loop.

The scaled variants multiply the parent update by the factor from
:mod:`contrafit.contraction`, computed from the pre-update weights. The very
first update always uses factor 1 so a zero-initialized learner is not
amplified by the floor guard.
"""

from dataclasses import dataclass, field

import numpy as np

from .contraction import FactorPolicy, step_factor
from .core import (
    DivergenceError,
    InvalidInputError,
    LabeledSample,
    LearningCurve,
    NumericalBreakdownError,
    WeightState,
    l1_norm,
    linf_norm,
    mse,
)


def _input_sup(x) -> float:
    """Sup norm of the input window; 0 signals a degenerate all-zero window."""
    return float(np.max(np.abs(x)))


@dataclass
class LmsState:
    """LMS filter state. ``policy=None`` is the plain Widrow-Hoff update;
    a policy enables the step-scaled variant."""

    weights: WeightState
    mu: float = 0.01
    policy: FactorPolicy | None = None
    steps_taken: int = 0
    last_factor: float = 1.0

    def __post_init__(self):
        if not self.mu > 0:
            raise InvalidInputError(f"LmsState: mu must be positive, got {self.mu}")

    @classmethod
    def zeros(cls, dim, mu=0.01, policy=None):
        return cls(weights=WeightState.zeros(dim), mu=mu, policy=policy)

    @property
    def l1(self) -> float:
        return self.weights.l1

    def predict(self, X):
        return np.asarray(X, dtype=float) @ self.weights.w

    def step(self, sample: LabeledSample):
        return lms_step(self, sample)[1:]


def lms_step(state: LmsState, sample: LabeledSample):
    """One LMS update. Returns ``(state, prediction, error)``.

    Baseline: ``w += mu * e * x``. Scaled: ``w += f * mu * e * x`` with
    ``f = step_factor(l1(w), sup(x))`` from the pre-update weights.
    """
    x = sample.x
    w = state.weights.w
    if x.size != w.size:
        raise InvalidInputError(f"lms_step: dim mismatch {x.size} vs {w.size}")
    y = float(w @ x)
    e = sample.t - y
    f = 1.0
    if state.policy is not None and state.steps_taken > 0:
        x_inf = _input_sup(x)
        if x_inf > 0.0:  # all-zero window leaves w unchanged anyway
            f = step_factor(state.weights.l1, x_inf, state.policy)
    state.weights.set(w + (f * state.mu * e) * x)
    state.steps_taken += 1
    state.last_factor = f
    return state, y, e


@dataclass
class RlsState:
    """RLS state: weights plus the inverse-autocorrelation estimate ``p``.

    ``lam`` is the exponential forgetting factor in (0, 1]. The scaled
    variant applies separate factors to the weight update (from ``l1(w)``)
    and to the ``p`` update (from the entrywise ``l1(p)``).
    """

    weights: WeightState
    p: np.ndarray
    lam: float = 1.0
    policy: FactorPolicy | None = None
    steps_taken: int = 0
    last_factor: float = 1.0

    def __post_init__(self):
        self.p = np.asarray(self.p, dtype=float)
        if not (0.0 < self.lam <= 1.0):
            raise InvalidInputError(f"RlsState: lambda must be in (0,1], got {self.lam}")
        if self.p.ndim != 2 or self.p.shape[0] != self.p.shape[1]:
            raise InvalidInputError("RlsState: p must be square")
        if self.p.shape[0] != self.weights.w.size:
            raise InvalidInputError("RlsState: p size does not match weights")

    @classmethod
    def zeros(cls, dim, lam=1.0, delta=0.01, policy=None):
        """Standard initialization ``w = 0``, ``P = (1/delta) I``."""
        return cls(
            weights=WeightState.zeros(dim),
            p=np.eye(int(dim)) / float(delta),
            lam=lam,
            policy=policy,
        )

    @property
    def l1(self) -> float:
        return self.weights.l1

    def predict(self, X):
        return np.asarray(X, dtype=float) @ self.weights.w

    def step(self, sample: LabeledSample):
        return rls_step(self, sample)[1:]


def rls_step(state: RlsState, sample: LabeledSample):
    """One RLS recursion step. Returns ``(state, prediction, error)``.

    Gain ``k = P x / (lam + x' P x)``; baseline updates ``w += k e`` and
    ``P = (P - k x' P) / lam``. The scaled variant multiplies ``k e`` by the
    weight factor and ``k x' P`` by the P factor.
    """
    x = sample.x
    w = state.weights.w
    if x.size != w.size:
        raise InvalidInputError(f"rls_step: dim mismatch {x.size} vs {w.size}")
    y = float(w @ x)
    e = sample.t - y
    px = state.p @ x
    denom = state.lam + float(x @ px)
    if denom <= 0.0 or not np.isfinite(denom):
        raise NumericalBreakdownError(f"rls_step: gain denominator {denom} <= 0")
    k = px / denom
    f_w = f_p = 1.0
    if state.policy is not None and state.steps_taken > 0:
        x_inf = _input_sup(x)
        if x_inf > 0.0:
            f_w = step_factor(state.weights.l1, x_inf, state.policy)
            f_p = step_factor(l1_norm(state.p), x_inf, state.policy)
    state.weights.set(w + (f_w * e) * k)
    # x' P == (P x)' for symmetric P
    p_new = (state.p - f_p * np.outer(k, px)) / state.lam
    p_new = 0.5 * (p_new + p_new.T)  # keep symmetry against rounding drift
    if not np.all(np.isfinite(p_new)):
        raise DivergenceError("rls_step: non-finite P")
    state.p = p_new
    state.steps_taken += 1
    state.last_factor = f_w
    return state, y, e


def run_online(
    learner,
    dataset,
    record_every: int,
    order=None,
    objective_fn=None,
) -> LearningCurve:
    """Drive a per-sample learner over the training set and record a curve.

    Every ``record_every`` steps the learner is frozen and train/test MSE,
    the entrywise weight norm and the mean realized factor since the last
    checkpoint are logged. ``order`` optionally replaces the sequential
    single pass with an explicit index sequence; an index tuple is handed to
    the learner as a batch of samples. ``objective_fn(learner)`` adds an
    extra per-checkpoint column.
    """
    if record_every < 1:
        raise InvalidInputError("run_online: record_every must be >= 1")
    items = range(len(dataset.train)) if order is None else order
    iters, train_curve, test_curve, l1s, factors, objectives = [], [], [], [], [], []
    fac_sum, fac_n, step_count = 0.0, 0, 0
    for item in items:
        if isinstance(item, (tuple, list, np.ndarray)):
            batch = [dataset.train[int(i)] for i in item]
            learner.step(batch)
        else:
            learner.step(dataset.train[int(item)])
        fac_sum += learner.last_factor
        fac_n += 1
        step_count += 1
        if step_count % record_every == 0:
            iters.append(step_count)
            train_curve.append(mse(learner.predict(dataset.train_x), dataset.train_t))
            test_curve.append(mse(learner.predict(dataset.test_x), dataset.test_t))
            l1s.append(learner.l1)
            factors.append(fac_sum / fac_n)
            if objective_fn is not None:
                objectives.append(objective_fn(learner))
            fac_sum, fac_n = 0.0, 0
    return LearningCurve(
        iterations=np.array(iters, dtype=int),
        train_mse=np.array(train_curve),
        test_mse=np.array(test_curve),
        l1=np.array(l1s),
        factor=np.array(factors),
        objective=np.array(objectives) if objective_fn is not None else None,
    )
