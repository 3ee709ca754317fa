"""Line-chart rendering of ensemble output to SVG files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .simulate import EnsembleSummary

__all__ = ["save_ensemble_figure", "save_sweep_figure"]

_WEIGHT_LABELS = {"wB": "bond", "wL": "longevity bond", "wS": "stock", "w0": "money market"}

plt.rcParams.update(
    {
        "figure.figsize": (9.0, 3.6),
        "axes.grid": True,
        "grid.alpha": 0.3,
        "font.size": 9,
        "svg.hashsalt": "longevity-hedge",  # deterministic SVG ids
    }
)


def save_ensemble_figure(summary: EnsembleSummary, path) -> Path:
    """Average weight paths (left) and average surplus-to-wealth ratio (right)."""
    path = Path(path)
    fig, (ax_w, ax_y) = plt.subplots(1, 2)
    t = summary.t_grid
    for key, label in _WEIGHT_LABELS.items():
        ax_w.plot(t, summary.means[key], label=label)
    ax_w.set_xlabel("time (years)")
    ax_w.set_ylabel("average portfolio weight")
    ax_w.legend(fontsize=8)
    ax_y.plot(t, summary.means["YoverF"], color="tab:purple")
    ax_y.set_xlabel("time (years)")
    ax_y.set_ylabel("average Y/F")
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def save_sweep_figure(result, path) -> Path:
    """One panel per weight, one line per swept value."""
    path = Path(path)
    fig, axes = plt.subplots(2, 2, figsize=(9.0, 6.4))
    param = result.spec.parameter
    for ax, (key, label) in zip(axes.ravel(), _WEIGHT_LABELS.items()):
        for value in sorted(result.summaries):
            sm = result.summaries[value]
            ax.plot(sm.t_grid, sm.means[key], label=f"{param}={value:g}")
        ax.set_xlabel("time (years)")
        ax.set_ylabel(f"average {label} weight")
    axes[0, 0].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path
