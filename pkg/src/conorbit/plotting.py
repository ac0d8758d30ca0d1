"""PNG rendering of CLI outputs (matplotlib, Agg backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .pathspace import lift  # noqa: E402


def _boundary_xy(Q, torus, n=400):
    if Q is None:
        return None
    if Q.is_point:
        return np.atleast_2d(Q.point)
    s = np.linspace(0, 1, n + 1)
    X = Q.at(s)
    if torus:
        X = np.mod(X, 1.0)
        # break the polyline where it wraps
        jumps = np.flatnonzero(np.linalg.norm(np.diff(X, axis=0), axis=1) > 0.5)
        X = np.insert(X, jumps + 1, np.nan, axis=0)
    return X


def _draw_boundaries(ax, model, Q0, Q1):
    for Q, c in ((Q0, "0.25"), (Q1, "0.55")):
        X = _boundary_xy(Q, model.is_torus)
        if X is None:
            continue
        if len(X) == 1:
            ax.plot(X[:, 0], X[:, 1], "o", color=c, label=Q.label or None)
        else:
            ax.plot(X[:, 0], X[:, 1], "-", color=c, lw=1, label=Q.label or None)


def plot_paths(model, paths, Q0, Q1, file, title=""):
    """Paths drawn as lifts; the unit cell is outlined on the torus."""
    fig, ax = plt.subplots(figsize=(5, 5))
    if model.is_torus:
        ax.plot([0, 1, 1, 0, 0], [0, 0, 1, 1, 0], color="0.7", lw=0.8)
    _draw_boundaries(ax, model, Q0, Q1)
    colors = plt.cm.tab10(np.arange(10))
    for i, p in enumerate(paths):
        if p is None:
            continue
        X = lift(model, p.points())
        ax.plot(X[:, 0], X[:, 1], "-", lw=1.4, color=colors[i % 10], label=f"path {i}")
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(title)
    ax.legend(fontsize=7, loc="best")
    fig.tight_layout()
    fig.savefig(file, dpi=110)
    plt.close(fig)


def plot_string(bead_actions, alpha, file, title=""):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(np.arange(len(bead_actions)), bead_actions, "o-", ms=3)
    ax.axhline(alpha, color="tab:red", ls="--", lw=1, label="alpha")
    ax.axhline(0.0, color="0.6", lw=0.8)
    ax.set_xlabel("bead")
    ax.set_ylabel("action")
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(file, dpi=110)
    plt.close(fig)


def plot_minimax(curve, file, title=""):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ok = np.asarray(curve.converged, dtype=bool)
    ax.plot(curve.k, curve.c_omega, "-", color="0.6", lw=1)
    ax.plot(curve.k[ok], curve.c_omega[ok], "o", color="tab:blue", label="converged")
    if (~ok).any():
        ax.plot(curve.k[~ok], curve.c_omega[~ok], "x", color="tab:red", label="flagged")
    ax.set_xlabel("k")
    ax.set_ylabel("minimax value")
    ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(file, dpi=110)
    plt.close(fig)


def plot_brackets(entries, file, title=""):
    """``entries``: list of ``(name, lower, upper)``."""
    fig, ax = plt.subplots(figsize=(5, 0.5 + 0.45 * len(entries)))
    for i, (name, lo, up) in enumerate(entries):
        ax.plot([lo, up], [i, i], "-", lw=4, color="tab:blue", solid_capstyle="butt")
        ax.plot([lo, up], [i, i], "|", color="k", ms=10)
    ax.set_yticks(range(len(entries)))
    ax.set_yticklabels([e[0] for e in entries])
    ax.invert_yaxis()
    ax.set_xlabel("energy")
    ax.set_title(title)
    fig.tight_layout()
    fig.savefig(file, dpi=110)
    plt.close(fig)


def plot_ranges(k, r0, r1, file, title=""):
    fig, ax = plt.subplots(figsize=(5, 2))
    ax.plot(r0, [0, 0], "-", lw=6, label="I range at q0")
    ax.plot(r1, [1, 1], "-", lw=6, label="I range at q1")
    ax.set_yticks([0, 1])
    ax.set_yticklabels(["q0", "q1"])
    ax.set_xlabel("I = v_x + psi(y)")
    ax.set_title(title or f"k = {k:g}")
    fig.tight_layout()
    fig.savefig(file, dpi=110)
    plt.close(fig)
