"""Figure rendering for experiment outputs.

Each experiment writes its delimited data first; these helpers draw the
matching overview figure next to it.  Rendering is optional at the CLI level
and never feeds back into the numeric outputs.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "render_spectrum_stats",
    "render_vector_profile",
    "render_distribution",
    "render_section",
    "render_cells",
    "render_coupling",
    "render_lattice",
    "render_evolution",
]

_DPI = 150


def _boundary_lines(ax, boundaries, axis="y"):
    for b in boundaries:
        if axis == "y":
            ax.axhline(b, color="0.6", lw=0.6, ls="--", zorder=0)
        else:
            ax.axvline(b, color="0.6", lw=0.6, ls="--", zorder=0)


def _finish(fig, path: Path):
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)


def render_spectrum_stats(path, states, boundaries, title):
    """Level mean against root variance, one point per eigenstate."""
    fig, ax = plt.subplots(figsize=(5.0, 4.2))
    var = [s.variance for s in states]
    mean = [s.mean for s in states]
    ax.plot(var, mean, ".", ms=3.0, color="tab:blue")
    _boundary_lines(ax, boundaries, axis="y")
    ax.set_xlabel(r"root variance $\Delta_q$")
    ax.set_ylabel(r"mean level $m_q$")
    ax.set_title(title, fontsize=10)
    _finish(fig, path)


def render_quasienergy_scatter(path, states, boundaries, h_mu, title):
    """Level mean against quasienergy for the one-period operator."""
    fig, ax = plt.subplots(figsize=(5.0, 4.2))
    sig = [s.quasienergy for s in states]
    mean = [s.mean for s in states]
    ax.plot(sig, mean, ".", ms=3.0, color="tab:red")
    _boundary_lines(ax, boundaries, axis="y")
    ax.set_xlim(0, h_mu)
    ax.set_xlabel(r"quasienergy $\sigma_q$")
    ax.set_ylabel(r"mean level $m_q$")
    ax.set_title(title, fontsize=10)
    _finish(fig, path)


def render_vector_profile(path, levels, probabilities, boundaries, title):
    fig, ax = plt.subplots(figsize=(5.6, 3.2))
    ax.plot(levels, probabilities, "-", lw=0.8, color="tab:blue")
    _boundary_lines(ax, boundaries, axis="x")
    ax.set_xlabel("level $m$")
    ax.set_ylabel(r"$|A_m|^2$")
    ax.set_title(title, fontsize=10)
    _finish(fig, path)


def render_distribution(path, probabilities, boundaries, m0, title):
    fig, ax = plt.subplots(figsize=(5.6, 3.6))
    m = np.arange(len(probabilities))
    pos = probabilities > 0
    ax.semilogy(m[pos], probabilities[pos], "-", lw=0.8, color="tab:blue")
    ax.axvline(m0, color="tab:green", lw=0.8, ls=":", label="initial level")
    _boundary_lines(ax, boundaries, axis="x")
    ax.set_xlabel("level $m$")
    ax.set_ylabel(r"$\bar P_m$")
    ax.set_title(title, fontsize=10)
    ax.legend(fontsize=8, loc="upper right")
    _finish(fig, path)


def render_section(path, section, boundaries, title):
    fig, ax = plt.subplots(figsize=(5.2, 4.6))
    th = section.theta.ravel()
    kr = section.kr.ravel()
    ax.plot(th, kr, ",", color="k", alpha=0.5)
    _boundary_lines(ax, boundaries, axis="y")
    ax.set_xlim(0, 2 * np.pi)
    ax.set_xlabel(r"folded angle $\theta$")
    ax.set_ylabel(r"amplitude $kr$")
    ax.set_title(title, fontsize=10)
    _finish(fig, path)


def render_cells(path, partition, title):
    """Boundary positions in level index and amplitude."""
    fig, ax = plt.subplots(figsize=(5.6, 3.0))
    for i, (m, kr) in enumerate(
        zip(partition.boundaries_real, partition.classical_boundaries), start=1
    ):
        ax.axvline(m, color="tab:blue", lw=1.0)
        ax.annotate(
            f"$kr_{i}$={kr:.2f}", (m, 0.75 - 0.18 * (i % 3)),
            fontsize=7, rotation=90, ha="right",
        )
    ax.set_xlim(0, partition.boundaries_real[-1] * 1.05 if partition.count else 1)
    ax.set_yticks([])
    ax.set_xlabel("level $m$")
    ax.set_title(title, fontsize=10)
    _finish(fig, path)


def render_coupling(path, levels, values, boundaries, title):
    fig, ax = plt.subplots(figsize=(5.6, 3.2))
    ax.plot(levels, values, "-", lw=0.8, color="tab:blue")
    ax.axhline(0.0, color="0.8", lw=0.6)
    _boundary_lines(ax, boundaries, axis="x")
    ax.set_xlabel("level $m$")
    ax.set_ylabel("coupling element")
    ax.set_title(title, fontsize=10)
    _finish(fig, path)


def render_lattice(path, result, title):
    """Interior lattice quasienergies against the level mean."""
    h_mu = result.problem.params.h * result.problem.params.mu
    keep = result.interior_indices(rings=1, limit=1e-6)
    levels = np.arange(result.problem.basis_size)
    fig, ax = plt.subplots(figsize=(5.0, 4.2))
    sig = np.mod(result.eigenvalues[keep] + result.problem.params.h / 2, h_mu)
    means = [float(result.level_marginal(q) @ levels) for q in keep]
    ax.plot(sig, means, ".", ms=2.5, color="tab:purple")
    ax.set_xlabel(r"quasienergy $\sigma_q$ (mod $h\mu$)")
    ax.set_ylabel(r"mean level $m_q$")
    ax.set_title(title, fontsize=10)
    _finish(fig, path)


def render_evolution(path, times, profiles, boundaries, title):
    fig, ax = plt.subplots(figsize=(5.6, 3.6))
    m = np.arange(profiles.shape[1])
    for tau, prof in zip(times, profiles):
        ax.plot(m, prof, lw=0.7, label=f"$\\tau$={tau:g}")
    _boundary_lines(ax, boundaries, axis="x")
    ax.set_xlabel("level $m$")
    ax.set_ylabel(r"$|c_m|^2$")
    ax.set_title(title, fontsize=10)
    if len(times) <= 8:
        ax.legend(fontsize=7)
    _finish(fig, path)
