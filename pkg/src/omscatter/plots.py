"""Render computed spectra to PNG files next to the delimited output."""
from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .spectrum import SpectrumGrid


def save_grid_figure(grid: SpectrumGrid, path: Path, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(5.4, 4.4))
    mesh = ax.pcolormesh(grid.p_axis, grid.q_axis, grid.values.T, shading="auto",
                         cmap="inferno", rasterized=True)
    ax.set_xlabel(r"$\Delta_p/\omega_M$")
    ax.set_ylabel(r"$\Delta_q/\omega_M$")
    ax.set_aspect("equal")
    if title:
        ax.set_title(title)
    fig.colorbar(mesh, ax=ax, label=r"$S(\Delta_p,\Delta_q)$")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_diagonal_figure(rows: np.ndarray, path: Path, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(5.8, 3.4))
    ax.plot(rows[:, 0], rows[:, 1], lw=1.2)
    ax.set_xlabel(r"$\Delta/\omega_M$")
    ax.set_ylabel(r"$S(\Delta,\Delta)$")
    if title:
        ax.set_title(title)
    ax.margins(x=0)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_comparison_figure(
    analytic: SpectrumGrid,
    oracle: SpectrumGrid,
    path: Path,
    window: tuple[float, float],
    title: str = "",
) -> Path:
    lo, hi = window

    def restrict(grid):
        sel = (grid.p_axis >= lo) & (grid.p_axis <= hi)
        return grid.p_axis[sel], grid.values[np.ix_(sel, sel)]

    axes_d, ax_vals = restrict(analytic)
    axes_o, or_vals = restrict(oracle)
    if ax_vals.shape != or_vals.shape or not np.allclose(axes_d, axes_o):
        raise ValueError("comparison figure needs both grids on the same mode axes")
    vmax = max(ax_vals.max(), or_vals.max())
    fig, axs = plt.subplots(1, 3, figsize=(12.0, 3.8), sharey=True)
    panels = [
        (ax_vals, "closed form"),
        (or_vals, "time domain"),
        (np.abs(or_vals - ax_vals), "|difference|"),
    ]
    for ax, (vals, label) in zip(axs, panels):
        mesh = ax.pcolormesh(axes_d, axes_d, vals.T, shading="auto", cmap="inferno",
                             vmax=vmax if label != "|difference|" else None)
        ax.set_title(label)
        ax.set_xlabel(r"$\Delta_p/\omega_M$")
        ax.set_aspect("equal")
        fig.colorbar(mesh, ax=ax)
    axs[0].set_ylabel(r"$\Delta_q/\omega_M$")
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
