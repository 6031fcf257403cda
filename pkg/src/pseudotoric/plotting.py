"""Static figure emission for the CLI report paths (SVG, matplotlib Agg)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .displacement import CutProfile, DisplacementReport
from .loops import Loop

__all__ = ["plot_loop", "plot_loop_pair", "plot_displacement"]


def _draw_loop(ax, g: Loop, label=None, color="C0"):
    z = g.samples(1024, closed=True)
    ax.plot(z.real, z.imag, color=color, label=label)


def plot_loop(g: Loop, path) -> None:
    """The base-plane loop with the origin marked."""
    fig, ax = plt.subplots(figsize=(5, 5))
    _draw_loop(ax, g)
    ax.plot([0], [0], "k+", markersize=10)
    ax.set_aspect("equal")
    ax.set_xlabel("Re a")
    ax.set_ylabel("Im a")
    fig.savefig(path, format="svg")
    plt.close(fig)


def plot_loop_pair(g1: Loop, g2: Loop, path) -> None:
    fig, ax = plt.subplots(figsize=(5, 5))
    _draw_loop(ax, g1, label="loop 1", color="C0")
    _draw_loop(ax, g2, label="loop 2", color="C1")
    ax.plot([0], [0], "k+", markersize=10)
    ax.set_aspect("equal")
    ax.legend(loc="best")
    ax.set_xlabel("Re a")
    ax.set_ylabel("Im a")
    fig.savefig(path, format="svg")
    plt.close(fig)


def plot_displacement(g: Loop, profile: CutProfile,
                      report: DisplacementReport, path) -> None:
    """Base-plane view: loop, cut ray, vanishing disc, projected clouds."""
    fig, ax = plt.subplots(figsize=(6, 6))
    _draw_loop(ax, g, label="loop", color="C0")
    lim = 1.3 * report.stop_radius
    ray = np.array([0, lim]) * np.exp(1j * profile.ray_angle)
    ax.plot(ray.real, ray.imag, "r--", label="cut ray")
    disc = plt.Circle((0, 0), profile.delta, color="0.8", zorder=0)
    ax.add_patch(disc)
    stop = plt.Circle((0, 0), report.stop_radius, fill=False,
                      linestyle=":", color="k")
    ax.add_patch(stop)
    if report.original is not None and report.flowed is not None:
        a0 = np.prod(report.original, axis=-1)
        a1 = np.prod(report.flowed, axis=-1)
        ax.plot(a0.real, a0.imag, ".", markersize=2, color="C0",
                label="projected samples")
        ax.plot(a1.real, a1.imag, ".", markersize=2, color="C3",
                label="flowed samples")
    ax.set_xlim(-lim, lim)
    ax.set_ylim(-lim, lim)
    ax.set_aspect("equal")
    ax.legend(loc="upper right", fontsize=8)
    ax.set_xlabel("Re a")
    ax.set_ylabel("Im a")
    fig.savefig(path, format="svg")
    plt.close(fig)
