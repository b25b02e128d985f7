"""Step-scaling factor derived from the fixed-point deviation bound of a
contractive iteration, plus the step-size design equations it implies.

The scaling applied to an update is ``1 + (1 - a)/a`` where ``a`` is the
entrywise L1 norm of the current parameters, optionally divided by the sup
norm of the current input (the L1/Linf dual pairing). The expression equals
``1/a``, so the factor boosts small-norm parameters and damps large ones,
and is exactly neutral at ``a = 1``.
"""

import math
from dataclasses import dataclass

from .core import ContractionViolationError, InvalidInputError

MODE_RAW = "raw"
MODE_DUAL = "dual_normalized"


@dataclass(frozen=True)
class FactorPolicy:
    """Configuration of the step-scaling factor.

    ``floor`` clamps the norm ratio away from zero (freshly zero-initialized
    learners would otherwise divide by zero) and ``cap`` bounds the factor
    itself so a single update can never be amplified without limit.
    """

    mode: str = MODE_DUAL
    floor: float = 1e-8
    cap: float = 1e3

    def __post_init__(self):
        if self.mode not in (MODE_RAW, MODE_DUAL):
            raise InvalidInputError(f"FactorPolicy: unknown mode {self.mode!r}")
        if not (0.0 < self.floor < 1.0 <= self.cap):
            raise InvalidInputError(
                "FactorPolicy: need 0 < floor < 1 <= cap, "
                f"got floor={self.floor}, cap={self.cap}"
            )


@dataclass(frozen=True)
class DesignConstants:
    """Proportionality constants of the convergence/misadjustment design
    equations. Exposed in configuration; both default to 1."""

    k1: float = 1.0
    k2: float = 1.0

    def __post_init__(self):
        if not (math.isfinite(self.k1) and self.k1 > 0):
            raise InvalidInputError("DesignConstants: k1 must be finite positive")
        if not (math.isfinite(self.k2) and self.k2 > 0):
            raise InvalidInputError("DesignConstants: k2 must be finite positive")


def _clamped_factor(a: float, policy: FactorPolicy) -> float:
    a = max(a, policy.floor)
    # 1 + (1 - a)/a == 1/a; the reciprocal form is exact at the floor
    return min(policy.cap, 1.0 / a)


def step_factor(w_l1: float, x_inf: float, policy: FactorPolicy) -> float:
    """Scaling factor for a weight update from the pre-update weight norm.

    ``a = w_l1 / x_inf`` in dual_normalized mode, ``a = w_l1`` in raw mode
    (callers pass ``x_inf = 1`` there). Returns ``min(cap, 1/max(a, floor))``.
    """
    if not (math.isfinite(x_inf) and x_inf > 0.0):
        raise InvalidInputError(f"step_factor: x_inf must be positive, got {x_inf}")
    if not (math.isfinite(w_l1) and w_l1 >= 0.0):
        raise InvalidInputError(f"step_factor: w_l1 must be nonnegative, got {w_l1}")
    a = w_l1 / x_inf if policy.mode == MODE_DUAL else w_l1
    return _clamped_factor(a, policy)


def scalar_output_factor(y_abs: float, x_inf: float, policy: FactorPolicy) -> float:
    """Same scaling with the magnitude of a scalar output in place of the
    weight norm, for learners whose parameters live in feature space."""
    if not (math.isfinite(x_inf) and x_inf > 0.0):
        raise InvalidInputError(
            f"scalar_output_factor: x_inf must be positive, got {x_inf}"
        )
    if not (math.isfinite(y_abs) and y_abs >= 0.0):
        raise InvalidInputError(
            f"scalar_output_factor: y_abs must be nonnegative, got {y_abs}"
        )
    a = y_abs / x_inf if policy.mode == MODE_DUAL else y_abs
    return _clamped_factor(a, policy)


def contraction_bound(t_norm: float, u_norm: float, m: int) -> float:
    """Deviation bound ``t^m * u / (1 - t)`` after m iterations of a
    contraction with operator norm t and per-step disturbance norm u.

    Diagnostic only: a norm of 1 or more signals the iteration may diverge
    and raises instead of returning an infinite bound.
    """
    if not (math.isfinite(t_norm) and 0.0 <= t_norm):
        raise InvalidInputError(f"contraction_bound: bad operator norm {t_norm}")
    if t_norm >= 1.0:
        raise ContractionViolationError(
            f"contraction_bound: operator norm {t_norm} >= 1, no contraction"
        )
    if not (math.isfinite(u_norm) and u_norm >= 0.0):
        raise InvalidInputError(f"contraction_bound: bad disturbance norm {u_norm}")
    if m < 1:
        raise InvalidInputError(f"contraction_bound: m must be positive, got {m}")
    return t_norm**m * u_norm / (1.0 - t_norm)


def design_min_step(eps: float, n_max: int, k: DesignConstants = DesignConstants()):
    """Smallest step size that converges to a weight-norm target ``eps``
    within ``n_max`` iterations: ``k1 * eps / (n_max * (1 - eps))``."""
    if not (0.0 < eps < 1.0):
        raise InvalidInputError(f"design_min_step: eps must be in (0,1), got {eps}")
    if n_max < 1:
        raise InvalidInputError(f"design_min_step: n_max must be positive, got {n_max}")
    return k.k1 * eps / (n_max * (1.0 - eps))


def predicted_mse_floor(mu: float, eps: float, k: DesignConstants = DesignConstants()):
    """Steady-state MSE floor implied by step size ``mu`` at weight-norm
    target ``eps``: ``k2 * mu * (1 - eps) / eps``.

    Larger ``mu`` converges faster but floors higher; together with
    :func:`design_min_step` the two goals conflict through ``mu``.
    """
    if not (math.isfinite(mu) and mu > 0.0):
        raise InvalidInputError(f"predicted_mse_floor: mu must be positive, got {mu}")
    if not (0.0 < eps < 1.0):
        raise InvalidInputError(
            f"predicted_mse_floor: eps must be in (0,1), got {eps}"
        )
    return k.k2 * (mu / eps) * (1.0 - eps)
