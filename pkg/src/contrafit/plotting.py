"""Render comparison figures for a finished experiment to image files.

One figure per run directory: test MSE in dB for both variants, train MSE,
the tracked weight norm, and the realized step factor, all against the
iteration (or epoch) axis from the CSV.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def _db(values):
    return 10.0 * np.log10(np.maximum(np.asarray(values, dtype=float), 1e-300))


def render_curves(curve_b, curve_m, title: str, path: str) -> str:
    """Write a 2x2 comparison panel to ``path``. Either curve may be None
    when only one variant was run."""
    fig, axes = plt.subplots(2, 2, figsize=(10, 7), sharex=True)
    panels = [
        ("test MSE (dB)", lambda c: _db(c.test_mse)),
        ("train MSE (dB)", lambda c: _db(c.train_mse)),
        ("weight L1 norm", lambda c: c.l1),
        ("mean step factor", lambda c: c.factor),
    ]
    for ax, (label, extract) in zip(axes.flat, panels):
        for curve, name, style in (
            (curve_b, "baseline", "-"),
            (curve_m, "step-scaled", "--"),
        ):
            if curve is not None and len(curve):
                ax.plot(curve.iterations, extract(curve), style, label=name)
        ax.set_ylabel(label)
        ax.grid(True, alpha=0.3)
    for ax in axes[1]:
        ax.set_xlabel("iteration")
    axes[0, 0].legend()
    fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
