"""Command-line front end.

Three commands: ``list`` shows the built-in experiment presets, ``run``
executes one (or a config file) and writes the averaged learning curves as
CSV together with a key=value summary, the effective config, and a
comparison figure, and ``design`` evaluates the step-size design equations.

Exit codes: 0 success, 2 usage or configuration error, 3 divergence during
a run. ``CONTRA_SEED`` provides a default seed when ``--seed`` is absent.
"""

import argparse
import math
import os
import sys
from dataclasses import fields, replace

import numpy as np

from .bench import (
    PRESETS,
    ChannelSpec,
    ExperimentPreset,
    config_hash,
    preset_to_config_lines,
    run_monte_carlo,
)
from .contraction import DesignConstants, design_min_step, predicted_mse_floor
from .core import DivergenceError, InvalidInputError

CSV_HEADER = (
    "iteration,baseline_train_mse,baseline_test_mse,"
    "modified_train_mse,modified_test_mse,baseline_l1,modified_l1,factor_mean"
)

_INT_KEYS = {
    "embed_dim",
    "equalizer_delay",
    "n_train",
    "n_test",
    "n_runs",
    "seed",
    "record_every",
    "epochs",
    "hidden",
    "n_features",
    "n_nonzero",
    "n_steps",
    "batch_size",
}
_FLOAT_KEYS = {
    "mu",
    "sigma",
    "lambda_reg",
    "rls_lambda",
    "rls_delta",
    "noise_std",
    "factor_floor",
    "factor_cap",
}
_STR_KEYS = {"name", "algorithm", "factor_mode"}


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return repr(v)
    return str(v)


# ----------------------------------------------------------------------------
# Config files: plain "key = value" lines with # comments
# ----------------------------------------------------------------------------


def parse_config_file(path: str) -> dict:
    values = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise InvalidInputError(f"{path}:{lineno}: expected 'key = value'")
            values[key.strip()] = value.strip()
    return values


def preset_from_config(values: dict) -> tuple:
    """Rebuild (preset, variant) from a parsed config mapping."""
    values = dict(values)
    variant = values.pop("variant", "both")
    taps = values.pop("channel_taps", "none")
    nonlin = values.pop("channel_nonlinearity", "none")
    snr = values.pop("channel_snr_db", "inf")
    if taps == "none":
        channel = None
    else:
        channel = ChannelSpec(
            taps=tuple(float(t) for t in taps.split(",")),
            nonlinearity=(
                None
                if nonlin == "none"
                else tuple(float(c) for c in nonlin.split(","))
            ),
            snr_db=float(snr),
        )
    kwargs = {"channel": channel}
    for key, raw in values.items():
        if key in _INT_KEYS:
            kwargs[key] = int(raw)
        elif key in _FLOAT_KEYS:
            kwargs[key] = float(raw)
        elif key in _STR_KEYS:
            kwargs[key] = raw
        else:
            raise InvalidInputError(f"unknown config key {key!r}")
    missing = {"name", "algorithm"} - kwargs.keys()
    if missing:
        raise InvalidInputError(f"config missing keys: {sorted(missing)}")
    base = PRESETS.get(kwargs["name"])
    description = base.description if base is not None else ""
    preset = ExperimentPreset(description=description, **kwargs)
    return preset, variant


def validate_preset(preset: ExperimentPreset):
    if preset.algorithm not in ("lms", "rls", "klms", "nn", "lasso", "dantzig"):
        raise InvalidInputError(f"unknown algorithm {preset.algorithm!r}")
    if preset.algorithm not in ("lasso", "dantzig") and preset.channel is None:
        raise InvalidInputError("channel presets require channel parameters")
    positive = {
        "embed_dim": preset.embed_dim,
        "n_train": preset.n_train,
        "n_test": preset.n_test,
        "n_runs": preset.n_runs,
        "record_every": preset.record_every,
        "mu": preset.mu,
        "sigma": preset.sigma,
        "epochs": preset.epochs,
        "hidden": preset.hidden,
        "n_features": preset.n_features,
        "n_steps": preset.n_steps,
        "batch_size": preset.batch_size,
    }
    for key, value in positive.items():
        if not value > 0:
            raise InvalidInputError(f"{key} must be positive, got {value}")
    if preset.equalizer_delay < 0:
        raise InvalidInputError("equalizer_delay must be >= 0")
    if preset.lambda_reg < 0:
        raise InvalidInputError("lambda_reg must be >= 0")
    if not (0.0 < preset.rls_lambda <= 1.0):
        raise InvalidInputError("rls_lambda must be in (0, 1]")
    preset.policy()  # validates mode / floor / cap


# ----------------------------------------------------------------------------
# Output files
# ----------------------------------------------------------------------------


def _write_csv(path, curve_b, curve_m):
    ref = curve_b if curve_b is not None else curve_m
    if curve_b is not None and curve_m is not None:
        if not np.array_equal(curve_b.iterations, curve_m.iterations):
            raise InvalidInputError("variant curves have mismatched checkpoints")

    def col(curve, name, i):
        if curve is None:
            return "nan"
        return repr(float(getattr(curve, name)[i]))

    lines = [CSV_HEADER]
    for i, it in enumerate(ref.iterations):
        lines.append(
            ",".join(
                [
                    str(int(it)),
                    col(curve_b, "train_mse", i),
                    col(curve_b, "test_mse", i),
                    col(curve_m, "train_mse", i),
                    col(curve_m, "test_mse", i),
                    col(curve_b, "l1", i),
                    col(curve_m, "l1", i),
                    col(curve_m, "factor", i),
                ]
            )
        )
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")


def _write_summary(path, summary):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        for key, value in summary.items():
            fh.write(f"{key} = {_fmt(value)}\n")


def _write_config(path, preset, variant):
    lines = preset_to_config_lines(preset) + [f"variant = {variant}"]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("# effective configuration; re-run with: contrafit run --config <this file>\n")
        fh.write("\n".join(lines) + "\n")


# ----------------------------------------------------------------------------
# Commands
# ----------------------------------------------------------------------------


def cmd_list(args) -> int:
    for name, preset in PRESETS.items():
        print(f"{name:8s} {preset.description}")
    return 0


def cmd_run(args) -> int:
    if (args.preset is None) == (args.config is None):
        print("run: give exactly one of a preset name or --config", file=sys.stderr)
        return 2
    try:
        if args.config is not None:
            preset, variant = preset_from_config(parse_config_file(args.config))
        else:
            if args.preset not in PRESETS:
                print(
                    f"run: unknown preset {args.preset!r} "
                    f"(choose from {', '.join(PRESETS)})",
                    file=sys.stderr,
                )
                return 2
            preset, variant = PRESETS[args.preset], "both"
        if args.variant is not None:
            variant = args.variant
        overrides = {}
        if args.runs is not None:
            overrides["n_runs"] = args.runs
        if args.seed is not None:
            overrides["seed"] = args.seed
        elif args.config is None and os.environ.get("CONTRA_SEED"):
            overrides["seed"] = int(os.environ["CONTRA_SEED"])
        for key in ("mu", "sigma", "embed_dim", "record_every"):
            value = getattr(args, key)
            if value is not None:
                overrides[key] = value
        if getattr(args, "lambda") is not None:
            overrides["lambda_reg"] = getattr(args, "lambda")
        preset = replace(preset, **overrides)
        validate_preset(preset)
    except (InvalidInputError, OSError, ValueError) as err:
        print(f"run: configuration error: {err}", file=sys.stderr)
        return 2

    out_dir = args.out if args.out is not None else f"runs/{preset.name}"
    try:
        curve_b, curve_m, summary = run_monte_carlo(preset, variant=variant)
    except DivergenceError as err:
        print(
            f"run: divergence in seed {err.seed}, run index {err.run_index}: {err}",
            file=sys.stderr,
        )
        return 3
    os.makedirs(out_dir, exist_ok=True)
    _write_csv(os.path.join(out_dir, "curve.csv"), curve_b, curve_m)
    _write_summary(os.path.join(out_dir, "summary.txt"), summary)
    _write_config(os.path.join(out_dir, "config.txt"), preset, variant)
    if not args.no_plot:
        from .plotting import render_curves

        render_curves(
            curve_b,
            curve_m,
            f"{preset.name}: {preset.description}",
            os.path.join(out_dir, "curve.png"),
        )
    print(f"wrote {out_dir}/curve.csv ({config_hash(preset)})")
    return 0


def cmd_design(args) -> int:
    try:
        k = DesignConstants(k1=args.k1, k2=args.k2)
        mu_min = design_min_step(args.eps, args.n_max, k)
    except InvalidInputError as err:
        print(f"design: {err}", file=sys.stderr)
        return 2
    print(f"mu_min = {mu_min!r}")
    if args.mu is not None:
        try:
            floor = predicted_mse_floor(args.mu, args.eps, k)
        except InvalidInputError as err:
            print(f"design: {err}", file=sys.stderr)
            return 2
        print(f"predicted_mse_floor = {floor!r}")
        print(f"feasibility = {'feasible' if args.mu >= mu_min else 'infeasible'}")
    return 0


def _parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="contrafit",
        description=(
            "Classical iterative learners next to their contraction-scaled "
            "variants, with channel-equalization benchmarks"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_list = sub.add_parser("list", help="show built-in presets")
    p_list.set_defaults(func=cmd_list)

    p_run = sub.add_parser("run", help="run a preset or config file")
    p_run.add_argument("preset", nargs="?", help="preset name from `list`")
    p_run.add_argument("--config", help="config file path (key = value lines)")
    p_run.add_argument("--runs", type=int, help="Monte Carlo repetitions")
    p_run.add_argument("--seed", type=int, help="base seed (default: CONTRA_SEED env or preset)")
    p_run.add_argument(
        "--variant", choices=("both", "baseline", "modified"), help="which learners to run"
    )
    p_run.add_argument("--out", help="output directory (default runs/<preset>)")
    p_run.add_argument("--mu", type=float, help="step size override")
    p_run.add_argument("--sigma", type=float, help="kernel width override")
    p_run.add_argument("--lambda", type=float, help="regularization weight override")
    p_run.add_argument("--embed-dim", dest="embed_dim", type=int, help="equalizer input dimension")
    p_run.add_argument(
        "--record-every", dest="record_every", type=int, help="checkpoint interval"
    )
    p_run.add_argument("--no-plot", action="store_true", help="skip figure rendering")
    p_run.set_defaults(func=cmd_run)

    p_design = sub.add_parser("design", help="step-size design equations")
    p_design.add_argument("--eps", type=float, required=True, help="weight-norm target in (0,1)")
    p_design.add_argument("--n-max", dest="n_max", type=int, required=True, help="iteration budget")
    p_design.add_argument("--mu", type=float, help="step size to check against mu_min")
    p_design.add_argument("--k1", type=float, default=1.0)
    p_design.add_argument("--k2", type=float, default=1.0)
    p_design.set_defaults(func=cmd_design)
    return parser


def main(argv=None) -> int:
    try:
        args = _parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else 2
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
