"""Figure rendering for the report files, written next to the CSVs."""

from __future__ import annotations

import datetime as dt
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt          # noqa: E402
import numpy as np                       # noqa: E402
from matplotlib.colors import BoundaryNorm, ListedColormap  # noqa: E402

# significance bands for the pairwise-test heat map
P_BOUNDS = (0.0, 0.01, 0.05, 0.10, 1.0)
P_COLORS = ("#00441b", "#74c476", "#fb6a4a", "#1a1a1a")


def dm_heatmap(labels: Sequence[str], pvalues: np.ndarray, path) -> None:
    """Matrix of one-sided p-values; a dark column signals a strong model."""
    pvalues = np.asarray(pvalues, dtype=float)
    k = len(labels)
    cmap = ListedColormap(P_COLORS)
    cmap.set_bad("white")
    norm = BoundaryNorm(P_BOUNDS, cmap.N)
    fig, ax = plt.subplots(figsize=(2.2 + 0.55 * k, 1.8 + 0.55 * k))
    im = ax.imshow(np.ma.masked_invalid(pvalues), cmap=cmap, norm=norm)
    ax.set_xticks(range(k), labels, rotation=90)
    ax.set_yticks(range(k), labels)
    ax.set_title("p-value: small means the column model beats the row model")
    cbar = fig.colorbar(im, ax=ax, ticks=P_BOUNDS, shrink=0.8)
    cbar.set_label("p-value")
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def rmae_curves(dates: Sequence[dt.date], curves: Mapping[str, np.ndarray],
                path) -> None:
    """Rolling relative-MAE trajectories against the benchmark."""
    fig, ax = plt.subplots(figsize=(9, 4.5))
    for label, series in curves.items():
        ax.plot(dates, series, label=label, linewidth=1.2)
    ax.axhline(1.0, color="grey", linestyle="--", linewidth=0.8)
    ax.set_ylabel("rolling relative MAE")
    ax.set_xlabel("date")
    ax.legend(fontsize=7, ncol=2)
    fig.autofmt_xdate()
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)


def profit_fractions(fractions: Mapping[str, float], path) -> None:
    """Share of the perfect-foresight trading profit captured per variant."""
    labels = list(fractions)
    values = [fractions[lb] for lb in labels]
    fig, ax = plt.subplots(figsize=(7, 0.6 + 0.35 * len(labels)))
    ax.barh(range(len(labels)), values, color="#2b8cbe")
    ax.set_yticks(range(len(labels)), labels)
    ax.invert_yaxis()
    ax.set_xlabel("fraction of perfect-foresight profit")
    ax.axvline(1.0, color="grey", linestyle="--", linewidth=0.8)
    fig.savefig(path, dpi=150, bbox_inches="tight")
    plt.close(fig)
