"""Shared numeric primitives: norms, error metrics, dataset containers and
seedable random streams used by every learner and by the benchmark harness.
"""

from dataclasses import dataclass, field

import numpy as np


# ----------------------------------------------------------------------------
# Errors
# ----------------------------------------------------------------------------


class InvalidInputError(ValueError):
    """Raised when an argument violates an operation's preconditions."""


class DivergenceError(ArithmeticError):
    """Raised when a learner produces non-finite weights or coefficients."""

    def __init__(self, message, seed=None, run_index=None):
        super().__init__(message)
        self.seed = seed
        self.run_index = run_index


class NumericalBreakdownError(ArithmeticError):
    """Raised when a recursion denominator loses positivity."""


class ContractionViolationError(ValueError):
    """Raised when an operator norm of 1 or more makes the deviation bound
    meaningless (the underlying iteration may diverge)."""


class PreconditionError(RuntimeError):
    """Raised when an operation is called before its required prior state
    exists (for example a recursion that needs a previous sample)."""


# ----------------------------------------------------------------------------
# Norms and metrics
# ----------------------------------------------------------------------------


def l1_norm(v) -> float:
    """Entrywise L1 norm: sum of absolute values over all entries.

    Matrices are flattened, so a layer matrix and its vectorization get the
    same norm.
    """
    a = np.asarray(v, dtype=float)
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("l1_norm: non-finite entry")
    return float(np.sum(np.abs(a)))


def linf_norm(v) -> float:
    """Max absolute entry of a vector."""
    a = np.asarray(v, dtype=float)
    if a.size == 0:
        raise InvalidInputError("linf_norm: empty vector")
    if not np.all(np.isfinite(a)):
        raise InvalidInputError("linf_norm: non-finite entry")
    return float(np.max(np.abs(a)))


def mse(predictions, targets) -> float:
    """Mean squared difference between two equal-length vectors."""
    p = np.asarray(predictions, dtype=float)
    t = np.asarray(targets, dtype=float)
    if p.shape != t.shape or p.size == 0:
        raise InvalidInputError(
            f"mse: length mismatch or empty ({p.shape} vs {t.shape})"
        )
    d = p - t
    return float(np.mean(d * d))


# ----------------------------------------------------------------------------
# Data containers
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class LabeledSample:
    """One input window paired with its scalar target."""

    x: np.ndarray
    t: float

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 1 or x.size == 0:
            raise InvalidInputError("LabeledSample: x must be a non-empty vector")
        if not np.all(np.isfinite(x)) or not np.isfinite(self.t):
            raise InvalidInputError("LabeledSample: non-finite entry")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "t", float(self.t))


class Dataset:
    """Chronologically split train/test collection of labeled samples.

    Keeps contiguous arrays of the inputs and targets alongside the sample
    lists so frozen-weight evaluation stays vectorized.
    """

    def __init__(self, train, test, dim):
        self.train = list(train)
        self.test = list(test)
        self.dim = int(dim)
        for s in self.train + self.test:
            if s.x.size != self.dim:
                raise InvalidInputError(
                    f"Dataset: sample dim {s.x.size} != declared dim {self.dim}"
                )
        self.train_x = (
            np.stack([s.x for s in self.train])
            if self.train
            else np.empty((0, self.dim))
        )
        self.train_t = np.array([s.t for s in self.train])
        self.test_x = (
            np.stack([s.x for s in self.test]) if self.test else np.empty((0, self.dim))
        )
        self.test_t = np.array([s.t for s in self.test])

    def __len__(self):
        return len(self.train) + len(self.test)


class WeightState:
    """Weight array plus its cached entrywise L1 norm.

    The cache is refreshed on every assignment through :meth:`set`, so
    ``l1`` always equals ``l1_norm(w)``.
    """

    __slots__ = ("w", "l1")

    def __init__(self, w):
        self.set(np.asarray(w, dtype=float))

    def set(self, w):
        if not np.all(np.isfinite(w)):
            raise DivergenceError("WeightState: non-finite weights")
        self.w = w
        self.l1 = float(np.sum(np.abs(w)))

    @classmethod
    def zeros(cls, dim):
        return cls(np.zeros(int(dim)))

    def copy(self):
        return WeightState(self.w.copy())


# ----------------------------------------------------------------------------
# Random streams
# ----------------------------------------------------------------------------


class RngStream:
    """Deterministic random stream keyed by (seed, stream index).

    Backed by the Philox-4x64 counter-based generator with the key set to
    the (seed, index) pair, so equal keys reproduce the same sequence on any
    platform. Gaussian draws use the Box-Muller transform of consecutive
    uniforms rather than a rejection method, which pins the normal sequence
    to the uniform one.
    """

    def __init__(self, seed, index=0):
        self.seed = int(seed)
        self.index = int(index)
        key = np.array([self.seed, self.index], dtype=np.uint64)
        self._gen = np.random.Generator(np.random.Philox(key=key))

    def uniform(self, size=None):
        """Uniform draws on [0, 1)."""
        return self._gen.random(size)

    def normal(self, size=None):
        """Standard normal draws via Box-Muller on uniform pairs."""
        n = 1 if size is None else int(size)
        m = (n + 1) // 2
        u1 = 1.0 - self._gen.random(m)  # (0, 1] keeps the log finite
        u2 = self._gen.random(m)
        r = np.sqrt(-2.0 * np.log(u1))
        z = np.empty(2 * m)
        z[0::2] = r * np.cos(2.0 * np.pi * u2)
        z[1::2] = r * np.sin(2.0 * np.pi * u2)
        return float(z[0]) if size is None else z[:n]

    def symbols(self, size):
        """Equiprobable antipodal symbols from {-1, +1}."""
        return np.where(self._gen.random(size) < 0.5, -1.0, 1.0)

    def integers(self, n, size=None):
        """Uniform integers on [0, n) derived as floor(n * uniform)."""
        u = self._gen.random(size)
        return (u * n).astype(np.int64)

    def permutation(self, n):
        """Random permutation of range(n)."""
        return self._gen.permutation(n)


# ----------------------------------------------------------------------------
# Learning curves
# ----------------------------------------------------------------------------


@dataclass
class LearningCurve:
    """Per-checkpoint record of a training run.

    ``iterations`` counts update steps (or epochs for epoch-trained models);
    MSE values are linear scale; ``l1`` tracks the learner's entrywise weight
    norm; ``factor`` is the mean realized step factor since the previous
    checkpoint (1.0 for unscaled learners). ``objective`` optionally carries
    a regularized objective for solvers benchmarked on one.
    """

    iterations: np.ndarray
    train_mse: np.ndarray
    test_mse: np.ndarray
    l1: np.ndarray
    factor: np.ndarray
    objective: np.ndarray | None = None
    n_runs: int = 1
    config_hash: str = ""

    def __post_init__(self):
        self.iterations = np.asarray(self.iterations, dtype=int)
        for name in ("train_mse", "test_mse", "l1", "factor"):
            arr = np.asarray(getattr(self, name), dtype=float)
            setattr(self, name, arr)
            if arr.shape != self.iterations.shape:
                raise InvalidInputError(f"LearningCurve: {name} length mismatch")
            if not np.all(np.isfinite(arr)):
                raise InvalidInputError(f"LearningCurve: non-finite {name}")
        if self.objective is not None:
            self.objective = np.asarray(self.objective, dtype=float)
        if self.iterations.size and np.any(np.diff(self.iterations) <= 0):
            raise InvalidInputError("LearningCurve: iterations not increasing")

    def __len__(self):
        return self.iterations.size


def average_curves(curves) -> LearningCurve:
    """Pointwise mean of curves sharing the same checkpoint iterations."""
    if not curves:
        raise InvalidInputError("average_curves: no curves")
    base = curves[0]
    for c in curves[1:]:
        if not np.array_equal(c.iterations, base.iterations):
            raise InvalidInputError("average_curves: checkpoint mismatch")
    has_obj = base.objective is not None
    return LearningCurve(
        iterations=base.iterations.copy(),
        train_mse=np.stack([c.train_mse for c in curves]).mean(axis=0),
        test_mse=np.stack([c.test_mse for c in curves]).mean(axis=0),
        l1=np.stack([c.l1 for c in curves]).mean(axis=0),
        factor=np.stack([c.factor for c in curves]).mean(axis=0),
        objective=(
            np.stack([c.objective for c in curves]).mean(axis=0) if has_obj else None
        ),
        n_runs=len(curves),
        config_hash=base.config_hash,
    )
