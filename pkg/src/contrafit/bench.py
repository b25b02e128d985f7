"""Channel-equalization signal chain and the Monte Carlo experiment runner.

Each preset describes one comparative experiment: BPSK symbols through an
FIR channel, an optional memoryless polynomial nonlinearity, additive white
Gaussian noise at a given SNR, a tap-delay embedding, and one learner family
run twice over identical data (plain and step-scaled). Curves are averaged
pointwise over independently seeded runs; the summary reports the
comparative metrics alongside every effective hyperparameter.
"""

import hashlib
import math
from dataclasses import dataclass, field, fields, replace

import numpy as np

from .contraction import FactorPolicy
from .core import (
    Dataset,
    DivergenceError,
    InvalidInputError,
    LabeledSample,
    LearningCurve,
    RngStream,
    average_curves,
)
from .kernel_filters import KlmsModel
from .linear_filters import LmsState, RlsState, run_online
from .neural import Mlp, train_epochs
from .sparse import SparseState, dantzig_objective, lasso_objective

# stream index stride per run: data, learner init, sample order
_STREAMS_PER_RUN = 4


# ----------------------------------------------------------------------------
# Signal chain
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class ChannelSpec:
    """FIR taps, optional polynomial nonlinearity (c0, c1, c2) applied as
    ``c0 + c1*x + c2*x**2``, and the SNR of the noise injected after both."""

    taps: tuple
    nonlinearity: tuple | None = None
    snr_db: float = math.inf

    def __post_init__(self):
        if len(self.taps) == 0:
            raise InvalidInputError("ChannelSpec: taps must be nonempty")
        if not math.isfinite(self.snr_db) and self.snr_db != math.inf:
            raise InvalidInputError("ChannelSpec: snr_db must be finite or +inf")


def gen_bpsk(n: int, rng: RngStream) -> np.ndarray:
    """n independent equiprobable symbols from {-1, +1}."""
    if n < 1:
        raise InvalidInputError("gen_bpsk: n must be >= 1")
    return rng.symbols(n)


def apply_fir(signal, taps) -> np.ndarray:
    """Causal FIR filtering with zero prefix padding; output length equals
    input length."""
    s = np.asarray(signal, dtype=float)
    h = np.asarray(taps, dtype=float)
    if h.size == 0:
        raise InvalidInputError("apply_fir: empty taps")
    if s.size == 0:
        raise InvalidInputError("apply_fir: empty signal")
    return np.convolve(s, h)[: s.size]


def apply_nonlinearity(signal, coeffs) -> np.ndarray:
    """Elementwise ``c0 + c1*x + c2*x**2``."""
    s = np.asarray(signal, dtype=float)
    c0, c1, c2 = (float(c) for c in coeffs)
    return c0 + c1 * s + c2 * s * s


def add_awgn(signal, snr_db: float, rng: RngStream) -> np.ndarray:
    """Add white Gaussian noise at ``snr_db`` below the empirical mean-square
    power of the signal at this point in the chain. ``snr_db = inf`` is the
    noise-off sentinel."""
    s = np.asarray(signal, dtype=float)
    if s.size == 0:
        raise InvalidInputError("add_awgn: empty signal")
    if snr_db == math.inf:
        return s.copy()
    power = float(np.mean(s * s))
    if power <= 0.0:
        raise InvalidInputError("add_awgn: zero-power signal")
    sigma = math.sqrt(power * 10.0 ** (-snr_db / 10.0))
    return s + sigma * rng.normal(s.size)


def embed(received, transmitted, dim: int, delay: int, n_train: int) -> Dataset:
    """Tap-delay embedding: sample n has ``x = [r[n], ..., r[n-dim+1]]``
    (zero padded) and target ``t = s[n - delay]``; the first ``n_train``
    samples are the train split, the rest the test split."""
    r = np.asarray(received, dtype=float)
    s = np.asarray(transmitted, dtype=float)
    if dim < 1:
        raise InvalidInputError("embed: dim must be >= 1")
    if delay < 0:
        raise InvalidInputError("embed: delay must be >= 0")
    if delay >= r.size:
        raise InvalidInputError("embed: delay >= signal length")
    padded = np.concatenate([np.zeros(dim - 1), r])
    samples = []
    for n in range(delay, r.size):
        window = padded[n : n + dim][::-1].copy()
        samples.append(LabeledSample(x=window, t=s[n - delay]))
    return Dataset(train=samples[:n_train], test=samples[n_train:], dim=dim)


# ----------------------------------------------------------------------------
# Presets
# ----------------------------------------------------------------------------


@dataclass(frozen=True)
class ExperimentPreset:
    """Complete configuration of one comparative experiment."""

    name: str
    algorithm: str  # lms | rls | klms | nn | lasso | dantzig
    description: str = ""
    channel: ChannelSpec | None = None
    embed_dim: int = 5
    equalizer_delay: int = 2
    n_train: int = 1000
    n_test: int = 200
    n_runs: int = 25
    seed: int = 1
    record_every: int = 20
    mu: float = 0.01
    sigma: float = 1.0  # kernel width
    lambda_reg: float = 0.1
    epochs: int = 80  # nn only
    hidden: int = 8  # nn only
    rls_lambda: float = 1.0
    rls_delta: float = 0.01
    n_features: int = 10  # synthetic regression only
    n_nonzero: int = 3
    noise_std: float = 0.05
    n_steps: int = 2000
    batch_size: int = 32
    factor_mode: str = "dual_normalized"
    factor_floor: float = 1e-8
    factor_cap: float = 1e3

    def policy(self) -> FactorPolicy:
        return FactorPolicy(
            mode=self.factor_mode, floor=self.factor_floor, cap=self.factor_cap
        )


def _builtin_presets():
    # Step sizes are deliberately aggressive: the comparisons live in the
    # regime where the plain learner is noisy or borderline unstable and the
    # scaled update shows its robustness. All values are printed in every
    # summary so results are self-describing.
    return [
        ExperimentPreset(
            name="lms",
            algorithm="lms",
            description="2-tap channel [-0.3, 0.8], 25 dB AWGN; LMS vs step-scaled LMS",
            channel=ChannelSpec(taps=(-0.3, 0.8), nonlinearity=None, snr_db=25.0),
            embed_dim=5,
            equalizer_delay=2,
            n_train=1000,
            n_test=200,
            n_runs=50,
            record_every=2,
            mu=0.38,
            factor_cap=3.0,
        ),
        ExperimentPreset(
            name="klms",
            algorithm="klms",
            description=(
                "2-tap channel [-0.3, 0.8], quadratic nonlinearity, 25 dB AWGN; "
                "KLMS vs step-scaled KLMS"
            ),
            channel=ChannelSpec(
                taps=(-0.3, 0.8), nonlinearity=(0.0, 1.0, -0.9), snr_db=25.0
            ),
            embed_dim=5,
            equalizer_delay=2,
            n_train=500,
            n_test=100,
            record_every=10,
            mu=1.8,
            sigma=1.0,
            factor_mode="raw",
            factor_cap=1.0,
        ),
        ExperimentPreset(
            name="nn-a",
            algorithm="nn",
            description=(
                "2-tap channel [1, 0.5], quadratic nonlinearity, 30 dB AWGN; "
                "backprop vs step-scaled backprop"
            ),
            channel=ChannelSpec(
                taps=(1.0, 0.5), nonlinearity=(0.0, 1.0, -0.9), snr_db=30.0
            ),
            embed_dim=5,
            equalizer_delay=2,
            n_train=300,
            n_test=100,
            record_every=5,
            mu=0.36,
            epochs=80,
            hidden=4,
        ),
        ExperimentPreset(
            name="nn-b",
            algorithm="nn",
            description=(
                "2-tap channel [1, 1], milder quadratic nonlinearity, 30 dB AWGN; "
                "backprop vs step-scaled backprop"
            ),
            channel=ChannelSpec(
                taps=(1.0, 1.0), nonlinearity=(0.0, 1.0, -0.5), snr_db=30.0
            ),
            embed_dim=5,
            equalizer_delay=2,
            n_train=300,
            n_test=100,
            record_every=5,
            mu=0.36,
            epochs=80,
            hidden=4,
        ),
        ExperimentPreset(
            name="rls",
            algorithm="rls",
            description=(
                "4-tap channel [0.4, 0.5, -0.4, 1], 20 dB AWGN; forgetting-factor "
                "RLS vs step-scaled RLS scored on the L1-regularized objective"
            ),
            channel=ChannelSpec(
                taps=(0.4, 0.5, -0.4, 1.0), nonlinearity=None, snr_db=20.0
            ),
            embed_dim=15,
            equalizer_delay=6,
            n_train=600,
            n_test=150,
            record_every=10,
            lambda_reg=0.5,
            rls_lambda=0.9,
            factor_mode="raw",
        ),
        ExperimentPreset(
            name="lasso",
            algorithm="lasso",
            description=(
                "synthetic uniform regression with planted sparse weights; "
                "subgradient solver vs step-scaled solver"
            ),
            channel=None,
            n_train=200,
            n_test=50,
            record_every=20,
            mu=0.4,
            lambda_reg=0.5,
            n_features=10,
            n_nonzero=3,
            noise_std=0.05,
            n_steps=2000,
            factor_cap=2.0,
        ),
        ExperimentPreset(
            name="dantzig",
            algorithm="dantzig",
            description=(
                "synthetic uniform regression with planted sparse weights; "
                "worst-residual subgradient solver vs step-scaled solver"
            ),
            channel=None,
            n_train=200,
            n_test=50,
            record_every=20,
            mu=0.2,
            lambda_reg=0.5,
            n_features=10,
            n_nonzero=3,
            noise_std=0.05,
            n_steps=2000,
            batch_size=32,
            factor_cap=2.0,
        ),
    ]


PRESETS = {p.name: p for p in _builtin_presets()}


# ----------------------------------------------------------------------------
# Config serialization (shared with the CLI)
# ----------------------------------------------------------------------------


def preset_to_config_lines(preset: ExperimentPreset) -> list:
    """Flatten a preset to sorted ``key = value`` lines."""
    lines = []
    for f in fields(preset):
        v = getattr(preset, f.name)
        if f.name == "channel":
            if v is None:
                lines.append("channel_taps = none")
                lines.append("channel_nonlinearity = none")
                lines.append("channel_snr_db = inf")
            else:
                lines.append(
                    "channel_taps = " + ",".join(repr(float(t)) for t in v.taps)
                )
                lines.append(
                    "channel_nonlinearity = "
                    + (
                        "none"
                        if v.nonlinearity is None
                        else ",".join(repr(float(c)) for c in v.nonlinearity)
                    )
                )
                lines.append(f"channel_snr_db = {v.snr_db!r}")
        elif f.name == "description":
            continue
        elif isinstance(v, float):
            lines.append(f"{f.name} = {v!r}")
        else:
            lines.append(f"{f.name} = {v}")
    return sorted(lines)


def config_hash(preset: ExperimentPreset) -> str:
    text = "\n".join(preset_to_config_lines(preset))
    return hashlib.sha256(text.encode()).hexdigest()[:16]


# ----------------------------------------------------------------------------
# Dataset construction
# ----------------------------------------------------------------------------


def make_dataset(preset: ExperimentPreset, rng: RngStream) -> Dataset:
    """Generate one run's dataset from the preset's signal chain (or the
    synthetic regression instance for the sparse presets)."""
    if preset.algorithm in ("lasso", "dantzig"):
        n = preset.n_train + preset.n_test
        d = preset.n_features
        X = rng.uniform(n * d).reshape(n, d)
        w_true = np.zeros(d)
        support = rng.permutation(d)[: preset.n_nonzero]
        w_true[support] = rng.symbols(preset.n_nonzero)
        t = X @ w_true + preset.noise_std * rng.normal(n)
        samples = [LabeledSample(x=X[i].copy(), t=float(t[i])) for i in range(n)]
        return Dataset(
            train=samples[: preset.n_train], test=samples[preset.n_train :], dim=d
        )
    ch = preset.channel
    n_total = preset.n_train + preset.n_test + preset.equalizer_delay
    s = gen_bpsk(n_total, rng)
    v = apply_fir(s, ch.taps)
    if ch.nonlinearity is not None:
        v = apply_nonlinearity(v, ch.nonlinearity)
    r = add_awgn(v, ch.snr_db, rng)
    return embed(r, s, preset.embed_dim, preset.equalizer_delay, preset.n_train)


def dataset_hash(ds: Dataset) -> str:
    h = hashlib.sha256()
    for arr in (ds.train_x, ds.train_t, ds.test_x, ds.test_t):
        h.update(np.ascontiguousarray(arr).tobytes())
    return h.hexdigest()[:16]


# ----------------------------------------------------------------------------
# Single run
# ----------------------------------------------------------------------------


def _make_learner(preset: ExperimentPreset, modified: bool, init_rng=None):
    policy = preset.policy() if modified else None
    dim = preset.embed_dim if preset.channel is not None else preset.n_features
    alg = preset.algorithm
    if alg == "lms":
        return LmsState.zeros(dim, mu=preset.mu, policy=policy)
    if alg == "rls":
        return RlsState.zeros(
            dim, lam=preset.rls_lambda, delta=preset.rls_delta, policy=policy
        )
    if alg == "klms":
        return KlmsModel(
            dim, sigma=preset.sigma, mu=preset.mu, policy=policy, variant="sum"
        )
    if alg == "nn":
        return Mlp(
            [dim, preset.hidden, 1],
            activation="tanh",
            mu=preset.mu,
            policy=policy,
            rng=init_rng,
        )
    if alg in ("lasso", "dantzig"):
        return SparseState.zeros(
            dim,
            mu=preset.mu,
            lambda_reg=preset.lambda_reg,
            policy=policy,
            objective=alg,
            batch_size=preset.batch_size,
        )
    raise InvalidInputError(f"unknown algorithm {alg!r}")


def _objective_fn(preset: ExperimentPreset, ds: Dataset):
    if preset.algorithm in ("rls", "lasso"):
        return lambda lr: lasso_objective(
            lr.weights.w, ds.train_x, ds.train_t, preset.lambda_reg
        )
    if preset.algorithm == "dantzig":
        return lambda lr: dantzig_objective(
            lr.weights.w, ds.train_x, ds.train_t, preset.lambda_reg
        )
    return None


def _sample_order(preset: ExperimentPreset, rng: RngStream):
    """Stochastic index sequence for the subgradient solvers (shared by both
    variants of a run). Other algorithms pass over the train set in order."""
    if preset.algorithm == "lasso":
        return list(rng.integers(preset.n_train, preset.n_steps))
    if preset.algorithm == "dantzig":
        return [
            tuple(rng.integers(preset.n_train, preset.batch_size))
            for _ in range(preset.n_steps)
        ]
    return None


def _run_variant(preset, ds, modified, init_rng, order, shuffle_rng):
    learner = _make_learner(preset, modified, init_rng=init_rng)
    if preset.algorithm == "nn":
        return train_epochs(
            learner, ds, preset.epochs, record_every=preset.record_every,
            rng=shuffle_rng,
        )
    return run_online(
        learner,
        ds,
        preset.record_every,
        order=order,
        objective_fn=_objective_fn(preset, ds),
    )


def run_single(preset: ExperimentPreset, run_index: int, variant="both") -> dict:
    """One Monte Carlo repetition. Both variants consume the identical
    dataset and the identical sample order; learner initialization and epoch
    shuffles come from per-run streams constructed the same way for both."""
    base = run_index * _STREAMS_PER_RUN
    data_rng = RngStream(preset.seed, base)
    ds = make_dataset(preset, data_rng)
    order = _sample_order(preset, RngStream(preset.seed, base + 2))
    out = {"data_hash": {}, "curves": {}}
    for label, modified in (("baseline", False), ("modified", True)):
        if variant != "both" and variant != label:
            continue
        out["data_hash"][label] = dataset_hash(ds)
        curve = _run_variant(
            preset,
            ds,
            modified,
            init_rng=RngStream(preset.seed, base + 1),
            order=order,
            shuffle_rng=RngStream(preset.seed, base + 3),
        )
        curve.config_hash = config_hash(preset)
        out["curves"][label] = curve
    return out


# ----------------------------------------------------------------------------
# Monte Carlo
# ----------------------------------------------------------------------------


def _iters_to_level(curve: LearningCurve, values, level: float) -> int:
    hits = np.nonzero(values <= level)[0]
    return int(curve.iterations[hits[0]]) if hits.size else -1


def run_monte_carlo(preset: ExperimentPreset, variant="both"):
    """Run every seed, average the two curves pointwise and compute the
    comparative summary. Returns ``(baseline_curve, modified_curve, summary)``
    with None standing in for a variant that was not run."""
    if variant not in ("both", "baseline", "modified"):
        raise InvalidInputError(f"run_monte_carlo: unknown variant {variant!r}")
    per_variant = {"baseline": [], "modified": []}
    hashes_match = True
    for r in range(preset.n_runs):
        try:
            single = run_single(preset, r, variant=variant)
        except DivergenceError as err:
            raise DivergenceError(
                f"run {r} (seed {preset.seed}) diverged: {err}",
                seed=preset.seed,
                run_index=r,
            ) from err
        for label, curve in single["curves"].items():
            per_variant[label].append(curve)
        h = single["data_hash"]
        if len(h) == 2 and h["baseline"] != h["modified"]:
            hashes_match = False
    avg = {
        label: average_curves(curves) if curves else None
        for label, curves in per_variant.items()
    }
    summary = _summarize(preset, avg["baseline"], avg["modified"], hashes_match)
    return avg["baseline"], avg["modified"], summary


def _summarize(preset, base_curve, mod_curve, hashes_match) -> dict:
    summary = {"preset": preset.name, "algorithm": preset.algorithm}
    for line in preset_to_config_lines(preset):
        key, _, value = line.partition(" = ")
        summary[key] = value
    summary["config_hash"] = config_hash(preset)
    summary["paired_data_ok"] = hashes_match
    for label, curve in (("baseline", base_curve), ("modified", mod_curve)):
        if curve is None:
            continue
        summary[f"{label}_final_train_mse"] = float(curve.train_mse[-1])
        summary[f"{label}_final_test_mse"] = float(curve.test_mse[-1])
        summary[f"{label}_final_l1"] = float(curve.l1[-1])
        summary[f"{label}_mean_factor"] = float(np.mean(curve.factor))
        if curve.objective is not None:
            summary[f"{label}_final_objective"] = float(curve.objective[-1])
    if base_curve is not None and mod_curve is not None:
        threshold = float(base_curve.test_mse[-1]) * 10.0 ** (0.1 / 10.0)
        summary["test_mse_threshold"] = threshold
        summary["iters_to_threshold_baseline"] = _iters_to_level(
            base_curve, base_curve.test_mse, threshold
        )
        summary["iters_to_threshold_modified"] = _iters_to_level(
            mod_curve, mod_curve.test_mse, threshold
        )
        if base_curve.objective is not None:
            best = min(
                float(np.min(base_curve.objective)),
                float(np.min(mod_curve.objective)),
            )
            target = 1.05 * best
            summary["best_objective"] = best
            summary["objective_target"] = target
            summary["iters_to_objective_target_baseline"] = _iters_to_level(
                base_curve, base_curve.objective, target
            )
            summary["iters_to_objective_target_modified"] = _iters_to_level(
                mod_curve, mod_curve.objective, target
            )
    return summary
