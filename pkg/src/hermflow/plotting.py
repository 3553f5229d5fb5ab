"""PNG figures written next to the CSV/JSON outputs (non-interactive Agg backend)."""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

STYLE = {
    "figure.figsize": (6.0, 4.0),
    "figure.dpi": 120,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "axes.spines.top": False,
    "axes.spines.right": False,
    "legend.frameon": False,
    "font.size": 9,
}

_MARKERS = {"simpleherm": "o", "ddsym": "s", "hermrw": "^"}


def _save(fig, path: str | Path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
    return path


def plot_sweep(mean_rows: Sequence[tuple], path: str | Path, title: str | None = None) -> Path:
    """Mean ARI against eta, one panel per p, one line per method."""
    ps = sorted({r[1] for r in mean_rows})
    methods = list(dict.fromkeys(r[0] for r in mean_rows))
    with plt.rc_context(STYLE):
        fig, axes = plt.subplots(1, len(ps), figsize=(3.2 * len(ps), 3.2), sharey=True, squeeze=False)
        for ax, p in zip(axes[0], ps):
            for m in methods:
                pts = sorted((r[2], r[4]) for r in mean_rows if r[0] == m and r[1] == p)
                ax.plot([e for e, _ in pts], [a for _, a in pts], marker=_MARKERS.get(m, "."), label=m)
            ax.set_title(f"p = {p:g}")
            ax.set_xlabel("eta")
            ax.set_ylim(-0.05, 1.05)
        axes[0][0].set_ylabel("mean ARI")
        axes[0][-1].legend(loc="lower right")
        if title:
            fig.suptitle(title)
        return _save(fig, path)


def plot_drift(labels: Sequence[str], values: Sequence[float], path: str | Path, ylabel: str = "symmetric difference") -> Path:
    """Drift between consecutive snapshots; ``labels[i]`` names the i-th pair."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots()
        x = np.arange(len(values))
        ax.plot(x, values, marker="o")
        ax.set_xticks(x)
        ax.set_xticklabels(labels, rotation=45, ha="right")
        ax.set_ylabel(ylabel)
        return _save(fig, path)


def plot_embedding(points: np.ndarray, labels: np.ndarray, path: str | Path, centers: np.ndarray | None = None) -> Path:
    """Scatter of the complex embedding coloured by ordered cluster."""
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.5, 4.5))
        sc = ax.scatter(points.real, points.imag, c=labels, s=6, cmap="viridis", alpha=0.7, linewidths=0)
        if centers is not None:
            ax.scatter(centers.real, centers.imag, marker="x", c="k", s=40)
        ax.set_xlabel("Re F(v)")
        ax.set_ylabel("Im F(v)")
        ax.set_aspect("equal", adjustable="datalim")
        fig.colorbar(sc, ax=ax, label="cluster")
        return _save(fig, path)
