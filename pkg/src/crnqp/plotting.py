"""Matplotlib figures written next to the CLI's data files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_path(columns: list[str], rows: np.ndarray, path, title: str = ""):
    rows = np.asarray(rows)
    xs = [j for j, c in enumerate(columns) if c.startswith("x_")]
    fig, ax = plt.subplots(figsize=(6, 4))
    for j in xs:
        drawstyle = "steps-post" if "ssa" in title else "default"
        ax.plot(rows[:, 0], rows[:, j], label=columns[j], drawstyle=drawstyle)
    if "H" in columns:
        ax2 = ax.twinx()
        ax2.plot(rows[:, 0], rows[:, columns.index("H")], "k:", lw=1, label="H")
        ax2.set_ylabel("H")
    ax.set_xlabel("t")
    ax.set_ylabel("state")
    ax.set_title(title)
    ax.legend(loc="best")
    return _save(fig, path)


def plot_levelsets(rows: np.ndarray, path):
    """Scatter of (x, p) per energy, one colour per energy level."""
    fig, ax = plt.subplots(figsize=(5, 5))
    for E in np.unique(rows[:, 0]):
        sel = rows[:, 0] == E
        for b in np.unique(rows[sel, 3]):
            part = rows[sel & (rows[:, 3] == b)]
            ax.plot(part[:, 1], part[:, 2], ".", ms=2, color=plt.cm.viridis(float(E) / max(1.0, rows[:, 0].max())))
        ax.plot([], [], ".", color=plt.cm.viridis(float(E) / max(1.0, rows[:, 0].max())), label=f"H = {E:g}")
    ax.set_xlabel("x")
    ax.set_ylabel("p")
    ax.legend(loc="best")
    return _save(fig, path)


def plot_quasipotential(rows: np.ndarray, path):
    fig, (a1, a2) = plt.subplots(1, 2, figsize=(9, 3.5))
    a1.plot(rows[:, 0], rows[:, 1])
    a1.set_xlabel("x")
    a1.set_ylabel("p(x)")
    a2.plot(rows[:, 0], rows[:, 2])
    a2.set_xlabel("x")
    a2.set_ylabel("Q(x)")
    return _save(fig, path)


def plot_distribution(lattice: np.ndarray, prob: np.ndarray, path):
    fig, ax = plt.subplots(figsize=(6, 4))
    if lattice.shape[1] == 1:
        ax.bar(lattice[:, 0], prob, width=(lattice[1, 0] - lattice[0, 0]) if len(lattice) > 1 else 0.8)
        ax.set_xlabel("x")
    else:
        sc = ax.scatter(lattice[:, 0], lattice[:, 1], c=prob, s=8)
        fig.colorbar(sc, ax=ax, label="probability")
        ax.set_xlabel("x_1")
        ax.set_ylabel("x_2")
    ax.set_title("stationary distribution")
    return _save(fig, path)
