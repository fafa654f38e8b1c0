"""Figure rendering. All figures are written as SVG so test suites can diff
them as text; output is deterministic (fixed hash salt, no date metadata)."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .diffusion import DiffusionTrace
from .estimator import EstimationTrace
from .graphs import NmaGraph
from .walkers import BottleBoard

__all__ = [
    "NODE_COLORS",
    "node_color",
    "save_figure",
    "diffusion_frames",
    "stacked_trace_figure",
    "trajectory_figure",
    "bottle_figure",
]

# Fixed per node index; cycles for larger networks.
NODE_COLORS = ("yellow", "orange", "red", "green", "violet", "blue")

matplotlib.rcParams["svg.hashsalt"] = "nma-diffuse"


def node_color(index: int) -> str:
    return NODE_COLORS[index % len(NODE_COLORS)]


def save_figure(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return path


def _circle_layout(n: int) -> np.ndarray:
    angles = np.pi / 2 - 2 * np.pi * np.arange(n) / n
    return np.column_stack([np.cos(angles), np.sin(angles)])


def diffusion_frames(
    trace: DiffusionTrace, graph: NmaGraph, outdir, prefix: str = "diffusion_step"
) -> list[Path]:
    """One network-graph SVG per step k = 1..N, node area proportional to the
    mass sitting at the node."""
    outdir = Path(outdir)
    pos_all = _circle_layout(graph.n_treatments)
    index = {lab: i for i, lab in enumerate(graph.treatments)}
    xy = {lab: pos_all[index[lab]] for lab in trace.labels}
    pos = np.array([xy[lab] for lab in trace.labels])
    edges = [
        (graph.treatments[i], graph.treatments[j])
        for i in range(graph.n_treatments)
        for j in range(i + 1, graph.n_treatments)
        if graph.a[i, j] > 0
        and graph.treatments[i] in xy
        and graph.treatments[j] in xy
    ]
    pad = max(2, len(str(trace.n_steps)))
    paths = []
    for k in range(1, trace.n_steps + 1):
        mass = trace.steps[k]
        fig, ax = plt.subplots(figsize=(4.2, 4.2))
        for u, v in edges:
            a, b = xy[u], xy[v]
            ax.plot([a[0], b[0]], [a[1], b[1]], color="0.8", lw=1.0, zorder=1)
        sizes = 300 + 2600 * mass
        ax.scatter(
            pos[:, 0],
            pos[:, 1],
            s=sizes,
            c=[node_color(index[lab]) for lab in trace.labels],
            edgecolors="black",
            linewidths=0.8,
            zorder=2,
        )
        for p, lab, v in zip(pos, trace.labels, mass):
            ax.annotate(
                f"{lab}\n{v:.3f}",
                p,
                ha="center",
                va="center",
                fontsize=8,
                zorder=3,
            )
        ax.set_title(f"step {k}")
        ax.set_xlim(-1.4, 1.4)
        ax.set_ylim(-1.4, 1.4)
        ax.set_aspect("equal")
        ax.axis("off")
        paths.append(save_figure(fig, outdir / f"{prefix}_{k:0{pad}d}.svg"))
    return paths


def stacked_trace_figure(trace: DiffusionTrace, path) -> Path:
    """Stacked probability plot of the whole trace, final shares annotated."""
    masses = trace.masses()
    steps = np.arange(masses.shape[0])
    colors = [node_color(i) for i in range(len(trace.labels))]
    fig, ax = plt.subplots(figsize=(7.5, 4.0))
    ax.stackplot(steps, masses.T, labels=trace.labels, colors=colors, lw=0)
    final = masses[-1]
    cum = np.concatenate([[0.0], np.cumsum(final)])
    for i, lab in enumerate(trace.labels):
        ax.annotate(
            f"{lab} {100 * final[i]:.1f}%",
            (steps[-1], (cum[i] + cum[i + 1]) / 2),
            xytext=(4, 0),
            textcoords="offset points",
            va="center",
            fontsize=8,
        )
    ax.set_xlabel("step")
    ax.set_ylabel("mass")
    ax.set_xlim(0, steps[-1])
    ax.set_ylim(0, max(1.0, masses.sum(axis=1).max()))
    ax.set_title(f"{trace.variant} walk")
    fig.tight_layout()
    return save_figure(fig, path)


def trajectory_figure(trace: EstimationTrace, path) -> Path:
    """Per-comparison fit trajectories with the squared distances from the
    converged fit annotated along the bottom."""
    steps = np.arange(trace.n_steps + 1)
    fits = np.vstack(trace.y_hat_steps)
    fig, ax = plt.subplots(figsize=(7.5, 4.5))
    for r in range(fits.shape[1]):
        ax.plot(
            np.concatenate([[-1], steps]),
            np.concatenate([[trace.y[r]], fits[:, r]]),
            lw=0.9,
            alpha=0.8,
        )
    q_values = [trace.q0] + list(trace.q_steps)
    q_positions = [-1] + list(steps)
    stride = max(1, math.ceil(len(q_positions) / 12))
    y0, y1 = ax.get_ylim()
    ax.set_ylim(y0 - 0.12 * (y1 - y0), y1)
    for pos, q in list(zip(q_positions, q_values))[::stride]:
        ax.annotate(
            f"{q:.2g}",
            (pos, 0),
            xycoords=("data", "axes fraction"),
            xytext=(0, 4),
            textcoords="offset points",
            ha="center",
            fontsize=7,
            rotation=45,
        )
    ax.axvline(0, color="0.85", lw=0.8)
    ax.set_xlabel("step (observed effects at -1, squared distances along the bottom)")
    ax.set_ylabel("treatment effect")
    title = f"{trace.variant} walk"
    if trace.reference:
        title += f", reference {trace.reference}"
    ax.set_title(title)
    fig.tight_layout()
    return save_figure(fig, path)


def bottle_figure(board: BottleBoard, path) -> Path:
    """Grouped bars: one block per node, one colored bar per walker origin."""
    n = len(board.labels)
    width = 1.0 / (n + 1)
    fig, ax = plt.subplots(figsize=(1.2 + 1.1 * n, 4.0))
    for origin in range(n):
        offsets = np.arange(n) + (origin - (n - 1) / 2) * width
        ax.bar(
            offsets,
            board.remaining[:, origin],
            width=width,
            color=node_color(origin),
            edgecolor="black",
            linewidth=0.4,
            label=board.labels[origin],
        )
    ax.set_xticks(np.arange(n))
    ax.set_xticklabels(board.labels)
    ax.set_xlabel("node")
    ax.set_ylabel("remaining volume")
    ax.set_title(
        f"bottles after {board.n_steps} steps of the {board.variant} walk "
        f"(size {board.initial_volume:g})"
    )
    ax.legend(title="walker origin", fontsize=8, ncols=min(n, 3))
    fig.tight_layout()
    return save_figure(fig, path)
