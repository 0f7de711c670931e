"""Figures rendered next to the CSV/JSON outputs.

matplotlib is imported lazily with the Agg backend, so the numerical
modules never pull in a graphics stack.
"""
from __future__ import annotations

from pathlib import Path

import numpy as np

__all__ = ["plot_lines", "plot_field"]


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


def plot_lines(path, x, series: dict, *, xlabel: str = "", ylabel: str = "", title: str = "",
               logx: bool = False, logy: bool = False, marker: str = "o") -> Path:
    """One panel with a line per entry of ``series``; returns the written path."""
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(5.5, 4.0))
    for label, y in series.items():
        y = np.asarray(y, dtype=float)
        if logy:
            y = np.abs(y)
        ax.plot(x, y, marker=marker, ms=3, label=label)
    if logx:
        ax.set_xscale("log")
    if logy:
        ax.set_yscale("log")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    if title:
        ax.set_title(title)
    if len(series) > 1:
        ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_field(path, field, *, title: str = "") -> Path:
    """Filled contour of a symmetric field over the mirrored cross-section."""
    plt = _pyplot()
    x1, x2, v = field.unfold()
    fig, ax = plt.subplots(figsize=(5.0, 4.0))
    cs = ax.contourf(x1, x2, v.T, levels=30)
    fig.colorbar(cs, ax=ax)
    ax.set_aspect("equal")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
