"""SVG figures for run analysis (accuracy, weight traces, resistance maps)."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import numpy as np
from matplotlib.figure import Figure

STYLE = {
    "svg.fonttype": "none",      # keep labels as searchable <text>
    "svg.hashsalt": "memnet",    # stable element ids
    "font.size": 9,
    "axes.spines.top": False,
    "axes.spines.right": False,
}
METADATA = {"Date": None, "Creator": "memnet"}


def _save(fig: Figure, path) -> None:
    with matplotlib.rc_context(STYLE):
        fig.savefig(path, format="svg", metadata=METADATA)


def _figure(width=5.0, height=3.2) -> Figure:
    with matplotlib.rc_context(STYLE):
        return Figure(figsize=(width, height), layout="constrained")


def accuracy_figure(rows, path) -> None:
    """``rows``: (epoch, train_acc, test_acc) with None for missing values."""
    with matplotlib.rc_context(STYLE):
        fig = _figure()
        ax = fig.add_subplot()
        train = [(e, a) for e, a, _ in rows if a is not None]
        test = [(e, t) for e, _, t in rows if t is not None]
        if train:
            ax.plot(*zip(*train), label="train (minibatch)", color="tab:blue")
        if test:
            ax.plot(*zip(*test), "o", label="test", color="tab:red")
        ax.set_xlabel("epoch")
        ax.set_ylabel("accuracy")
        ax.set_ylim(0, 1)
        ax.legend(frameon=False)
        _save(fig, path)


def weight_trace_figure(rows, path) -> None:
    """``rows``: (epoch, synapse id, conductance in S)."""
    with matplotlib.rc_context(STYLE):
        fig = _figure()
        ax = fig.add_subplot()
        for syn in dict.fromkeys(s for _, s, _ in rows):
            pts = [(e, g * 1e6) for e, s, g in rows if s == syn]
            ax.plot(*zip(*pts), marker=".", label=f"synapse {syn}")
        ax.set_xlabel("epoch")
        ax.set_ylabel("conductance (uS)")
        ax.legend(frameon=False)
        _save(fig, path)


def heatmap_figure(R, path, title: str = "resistive states") -> tuple[float, float]:
    """Colour-mapped device grid; the colour scale spans the grid's min/max."""
    R = np.asarray(R, dtype=np.float64)
    finite = R[np.isfinite(R)]
    lo, hi = (float(finite.min()), float(finite.max())) if finite.size else (0.0, 1.0)
    with matplotlib.rc_context(STYLE):
        fig = _figure(5.0, 4.4)
        ax = fig.add_subplot()
        mesh = ax.pcolormesh(np.ma.masked_invalid(R), cmap="viridis", vmin=lo, vmax=hi)
        mesh.set_gid("resistance-grid")
        ax.set_aspect("equal")
        ax.invert_yaxis()
        ax.set_xlabel("column")
        ax.set_ylabel("row")
        ax.set_title(title)
        fig.colorbar(mesh, ax=ax, label="resistance (ohm)")
        note = fig.text(0.01, 0.005, f"colour scale min={lo!r} max={hi!r} ohm", fontsize=7)
        note.set_gid("colour-scale")
        _save(fig, path)
    return lo, hi
