"""Figure rendering for the report path (PNG files next to the CSV output)."""
from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .materials import ZERO_CELSIUS  # noqa: E402

RC = {
    "font.size": 10,
    "axes.labelsize": 10,
    "legend.fontsize": 8,
    "xtick.labelsize": 8,
    "ytick.labelsize": 8,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "savefig.dpi": 150,
}


def figsize(width=6.0, height=None):
    if height is None:
        height = width * (math.sqrt(5) - 1.0) / 2.0
    return (width, height)


def _layer_lines(ax, stack, scale=100.0):
    for b in stack.boundaries()[:-1]:
        ax.axvline(b * scale, color="0.5", lw=0.7, ls="--")


def radial_profiles(history, n_curves: int = 10):
    """Temperature against radius at evenly spread instants of the cycle."""
    mesh = history.mesh
    idx = np.unique(np.linspace(0, len(history.times) - 1, n_curves).round().astype(int))
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=figsize())
        cmap = plt.get_cmap("coolwarm")
        for k, i in enumerate(idx):
            ax.plot(mesh.node_radii * 100, history.temps[i] - ZERO_CELSIUS, color=cmap(k / max(len(idx) - 1, 1)),
                    label=f"t = {history.times[i] / 60:.0f} min")
        _layer_lines(ax, mesh.stack)
        ax.set_xlabel("radius [cm]")
        ax.set_ylabel("temperature [°C]")
        ax.legend(ncol=2, loc="best")
        fig.tight_layout()
    return fig


def time_radius_map(history):
    mesh = history.mesh
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=figsize())
        mesh_plot = ax.pcolormesh(history.times / 60, mesh.node_radii * 100, (history.temps - ZERO_CELSIUS).T,
                                  shading="nearest", cmap="inferno")
        for b in mesh.stack.boundaries()[:-1]:
            ax.axhline(b * 100, color="w", lw=0.6, ls="--")
        ax.set_xlabel("time in orbit [min]")
        ax.set_ylabel("radius [cm]")
        ax.grid(False)
        fig.colorbar(mesh_plot, ax=ax, label="temperature [°C]")
        fig.tight_layout()
    return fig


def cross_sections(history, n_panels: int = 4):
    """Polar temperature maps of the disc at a few instants."""
    mesh = history.mesh
    idx = np.linspace(0, len(history.times) - 1, n_panels + 1).round().astype(int)[:-1]
    vmin, vmax = history.temps.min() - ZERO_CELSIUS, history.temps.max() - ZERO_CELSIUS
    theta = np.linspace(0, 2 * np.pi, 97)
    with plt.rc_context(RC):
        fig, axes = plt.subplots(1, n_panels, subplot_kw={"projection": "polar"}, figsize=(2.4 * n_panels, 2.8))
        for ax, i in zip(np.atleast_1d(axes), idx):
            field = np.tile(history.temps[i] - ZERO_CELSIUS, (len(theta), 1))
            im = ax.pcolormesh(theta, mesh.node_radii * 100, field.T, shading="nearest", cmap="inferno",
                               vmin=vmin, vmax=vmax)
            ax.set_title(f"{history.times[i] / 60:.0f} min")
            ax.set_xticks([])
            ax.set_yticklabels([])
            ax.grid(False)
        fig.colorbar(im, ax=list(np.atleast_1d(axes)), label="temperature [°C]", shrink=0.8)
    return fig


def safety_bars(report):
    names = [v.name for v in report.layers]
    x = np.arange(len(names))
    c = ZERO_CELSIUS
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=figsize())
        for i, v in enumerate(report.layers):
            ax.plot([i - 0.3, i + 0.3], [v.cold_bound - c] * 2, color="tab:blue")
            ax.plot([i - 0.3, i + 0.3], [v.hot_bound - c] * 2, color="tab:red")
            ax.bar(i, v.observed_max - v.observed_min, bottom=v.observed_min - c, width=0.35,
                   color="tab:green" if v.passed else "tab:orange")
        ax.set_xticks(x, names)
        ax.set_ylabel("temperature [°C]")
        ax.set_title(f"observed range vs limits (SF = {report.safety_factor:g})")
        fig.tight_layout()
    return fig


def candidate_scatter(result):
    cands = result.candidates
    with plt.rc_context(RC):
        fig, ax = plt.subplots(figsize=figsize())
        obj = np.array([c.objective for c in cands])
        viol = np.array([c.total_violation for c in cands])
        feas = np.array([c.feasible for c in cands])
        ax.scatter(obj[~feas], viol[~feas], s=8, color="0.6", label="infeasible")
        if feas.any():
            ax.scatter(obj[feas], viol[feas], s=12, color="tab:green", label="feasible")
        if result.best is not None:
            ax.scatter([result.best.objective], [result.best.total_violation], s=60, marker="*",
                       color="tab:red", label="selected")
        ax.set_xlabel("flexible fraction")
        ax.set_ylabel("total bound violation [K]")
        ax.legend()
        fig.tight_layout()
    return fig


def save(fig, path):
    fig.savefig(path, metadata={"Software": None})
    plt.close(fig)
