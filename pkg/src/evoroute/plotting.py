"""Report figures: route elevation profile and optimization convergence.

Rendered to PNG next to the CSV/JSON artifacts. Figures are presentation
only; every number they show is also in the delimited outputs.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .evolution import RunHistory
from .geometry import RouteSamples

FIGSIZE = (9.0, 4.5)
DPI = 150


def plot_profile(samples: RouteSamples, path) -> None:
    """Elevation profile: terrain, route, and tunneled stretches."""
    km = samples.s / 1000.0
    fig, ax = plt.subplots(figsize=FIGSIZE)

    ground = np.where(np.isfinite(samples.ground), samples.ground, np.nan)
    floor = np.nanmin([np.nanmin(ground), samples.z.min()]) - 30.0
    ax.fill_between(km, ground, floor, color="#c9b99a", alpha=0.8, linewidth=0, label="terrain")
    ax.plot(km, ground, color="#7a6a4f", linewidth=0.8)

    elevated_z = np.where(samples.kind == "elevated", samples.z, np.nan)
    tunneled_z = np.where(samples.kind == "tunneled", samples.z, np.nan)
    ax.plot(km, elevated_z, color="#1f77b4", linewidth=1.8, label="elevated")
    ax.plot(km, tunneled_z, color="#d62728", linewidth=1.8, linestyle="--", label="tunneled")

    ax.set_xlabel("distance along route [km]")
    ax.set_ylabel("elevation [m]")
    ax.set_xlim(km[0], km[-1])
    ax.legend(loc="best", frameon=False)
    ax.grid(True, alpha=0.25)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)


def plot_convergence(history: RunHistory, path) -> None:
    """Best and median population cost per generation, log scale."""
    gens = [r.generation for r in history.records]
    best = [r.best_total for r in history.records]
    median = [r.median_total for r in history.records]

    fig, ax = plt.subplots(figsize=FIGSIZE)
    ax.plot(gens, best, color="#1f77b4", linewidth=1.8, label="best")
    ax.plot(gens, median, color="#ff7f0e", linewidth=1.2, alpha=0.8, label="median")
    ax.set_yscale("log")
    ax.set_xlabel("generation")
    ax.set_ylabel("total cost [$]")
    ax.legend(loc="best", frameon=False)
    ax.grid(True, which="both", alpha=0.25)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI)
    plt.close(fig)
