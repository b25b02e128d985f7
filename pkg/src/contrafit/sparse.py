"""Stochastic subgradient solvers for L1-regularized regression.

Two objectives: an L2 data-fit plus L1 penalty, and a worst-case (sup norm)
data-fit plus L1 penalty. Updates descend the single-sample subgradient
``g = -(t - x'w) x + lambda * sign(w)`` (the squared-residual form, matching
the LMS error term), while the reported objectives keep the unsquared norms
as written. ``sign(0) = 0`` is the chosen subgradient element at kinks.
"""

from dataclasses import dataclass

import numpy as np

from .contraction import FactorPolicy, step_factor
from .core import (
    InvalidInputError,
    LabeledSample,
    WeightState,
    l1_norm,
)


def lasso_objective(w, X, t, lam: float) -> float:
    """``||t - X w||_2 + lam * ||w||_1``."""
    w = np.asarray(w, dtype=float)
    X = np.asarray(X, dtype=float)
    t = np.asarray(t, dtype=float)
    if X.shape[1] != w.size or X.shape[0] != t.size:
        raise InvalidInputError("lasso_objective: dim mismatch")
    r = t - X @ w
    return float(np.sqrt(r @ r) + lam * np.sum(np.abs(w)))


def dantzig_objective(w, X, t, lam: float) -> float:
    """``||t - X w||_inf + lam * ||w||_1``."""
    w = np.asarray(w, dtype=float)
    X = np.asarray(X, dtype=float)
    t = np.asarray(t, dtype=float)
    if X.shape[1] != w.size or X.shape[0] != t.size:
        raise InvalidInputError("dantzig_objective: dim mismatch")
    r = t - X @ w
    return float(np.max(np.abs(r)) + lam * np.sum(np.abs(w)))


def lasso_subgradient(w, sample: LabeledSample, lam: float) -> np.ndarray:
    """Descent-oriented single-sample subgradient
    ``g = -(t - x'w) x + lam * sign(w)``; apply as ``w -= mu * g``."""
    w = np.asarray(w, dtype=float)
    x = sample.x
    if x.size != w.size:
        raise InvalidInputError(f"lasso_subgradient: dim mismatch {x.size} vs {w.size}")
    e = sample.t - float(x @ w)
    return -e * x + lam * np.sign(w)


def dantzig_subgradient(w, batch, lam: float) -> np.ndarray:
    """Subgradient through the worst residual of a batch.

    Picks the batch sample with the largest absolute residual (ties go to
    the lowest index) and returns its residual term plus the penalty term.
    """
    w = np.asarray(w, dtype=float)
    if len(batch) == 0:
        raise InvalidInputError("dantzig_subgradient: empty batch")
    idx, _ = _worst_residual(w, batch)
    s = batch[idx]
    e = s.t - float(s.x @ w)
    return -e * s.x + lam * np.sign(w)


def _worst_residual(w, batch):
    best_idx, best_abs = 0, -1.0
    for i, s in enumerate(batch):
        r = abs(s.t - float(s.x @ w))
        if r > best_abs:
            best_idx, best_abs = i, r
    return best_idx, best_abs


@dataclass
class SparseState:
    """Subgradient solver state for either objective.

    ``objective`` selects the residual term: "lasso" consumes one sample per
    step, "dantzig" consumes a batch and descends through its worst residual.
    """

    weights: WeightState
    mu: float = 0.01
    lambda_reg: float = 0.1
    policy: FactorPolicy | None = None
    objective: str = "lasso"
    batch_size: int = 32
    steps_taken: int = 0
    last_factor: float = 1.0

    def __post_init__(self):
        if not self.mu > 0:
            raise InvalidInputError(f"SparseState: mu must be positive, got {self.mu}")
        if self.lambda_reg < 0:
            raise InvalidInputError("SparseState: lambda_reg must be nonnegative")
        if self.objective not in ("lasso", "dantzig"):
            raise InvalidInputError(f"SparseState: unknown objective {self.objective!r}")
        if self.batch_size < 1:
            raise InvalidInputError("SparseState: batch_size must be positive")

    @classmethod
    def zeros(cls, dim, **kwargs):
        return cls(weights=WeightState.zeros(dim), **kwargs)

    @property
    def l1(self) -> float:
        return self.weights.l1

    def predict(self, X):
        return np.asarray(X, dtype=float) @ self.weights.w

    def step(self, sample_or_batch):
        state, y, e = sgd_step(self, sample_or_batch)
        return y, e


def sgd_step(state: SparseState, sample_or_batch):
    """One subgradient step ``w -= f * mu * g``.

    ``f`` is 1 for the unscaled solver and the first step; otherwise the
    factor from the pre-update weight norm and the sup norm of the sample
    the subgradient actually used (the worst-residual one for batches).
    Returns ``(state, prediction, error)`` for the used sample.
    """
    w = state.weights.w
    if state.objective == "dantzig" and isinstance(sample_or_batch, (list, tuple)):
        batch = sample_or_batch
        if len(batch) == 0:
            raise InvalidInputError("sgd_step: empty batch")
        idx, _ = _worst_residual(w, batch)
        used = batch[idx]
    else:
        used = (
            sample_or_batch[0]
            if isinstance(sample_or_batch, (list, tuple))
            else sample_or_batch
        )
    if used.x.size != w.size:
        raise InvalidInputError(f"sgd_step: dim mismatch {used.x.size} vs {w.size}")
    y = float(used.x @ w)
    e = used.t - y
    g = -e * used.x + state.lambda_reg * np.sign(w)
    f = 1.0
    if state.policy is not None and state.steps_taken > 0:
        x_inf = float(np.max(np.abs(used.x)))
        if x_inf > 0.0:
            f = step_factor(state.weights.l1, x_inf, state.policy)
    state.weights.set(w - (f * state.mu) * g)
    state.steps_taken += 1
    state.last_factor = f
    return state, y, e
