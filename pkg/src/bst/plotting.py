"""Figures written next to the CLI's tabular output."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_spectrum(spectrum, path, title: str = "") -> None:
    """Stem plot of the length spectrum, colored by bounce count."""
    fig, ax = plt.subplots(figsize=(8, 3.5))
    qs = sorted({o.q for e in spectrum.entries for o in e.orbits})
    cmap = plt.get_cmap("viridis", max(len(qs), 2))
    for i, q in enumerate(qs):
        xs = [e.length for e in spectrum.entries if any(o.q == q for o in e.orbits)]
        ys = [e.multiplicity for e in spectrum.entries if any(o.q == q for o in e.orbits)]
        if xs:
            ax.vlines(xs, 0, ys, color=cmap(i), lw=1.5)
            ax.plot(xs, ys, "o", color=cmap(i), ms=4, label=f"q={q}")
    fams = [e.length for e in spectrum.entries if e.degenerate]
    if fams:
        ax.plot(fams, [0.1] * len(fams), "kx", ms=6, label="family")
    ax.set_xlabel("length")
    ax.set_ylabel("multiplicity")
    ax.set_ylim(0, max([e.multiplicity for e in spectrum.entries] + [1]) + 0.5)
    ax.legend(fontsize=7, ncol=4, loc="upper left")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def plot_orbits(geom, orbits, path, title: str = "") -> None:
    """Boundary curve with the found periodic polygons."""
    fig, ax = plt.subplots(figsize=(5, 5))
    th = np.linspace(0, 2 * np.pi, 721)
    pts = geom.point(th)
    ax.plot(pts[:, 0], pts[:, 1], "k-", lw=1)
    for o in orbits:
        X = geom.point(geom.theta_of_s(o.config.params))
        X = np.vstack([X, X[:1]])
        ax.plot(X[:, 0], X[:, 1], "--" if o.family else "-", lw=0.8, label=f"({o.p},{o.q}) {o.length:.4f}")
    ax.set_aspect("equal")
    ax.axis("off")
    if len(orbits) <= 12:
        ax.legend(fontsize=6, loc="lower right")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
