"""Expectation bookkeeping for walkers sipping drinks across the network.

Entry (i, j) of the cumulative visit matrix sum_{k<=N} T^k is the expected
time walkers starting at node j have spent at node i after N steps. Scaling
by inverse degree makes the matrix symmetric; bottles filled with a fixed
volume and drained one sip per visit turn it into a bar chart whose double
differences (between drink colors at a node, then between nodes) reproduce
the covariances of the network estimates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .diffusion import _Accumulator
from .errors import InputDataError
from .graphs import NmaGraph, TransitionMatrix, transition

__all__ = [
    "WalkState",
    "BottleBoard",
    "expected_stay",
    "scale_by_degree",
    "bottle_board",
    "diff_of_diffs",
]


@dataclass(frozen=True)
class WalkState:
    """Cumulative expected visits: column j counts time spent per node by
    walkers starting at j, over steps 0..n_steps inclusive."""

    visits: np.ndarray
    n_steps: int
    variant: str
    labels: tuple[str, ...]


@dataclass(frozen=True)
class BottleBoard:
    """Remaining volume per (node, walker origin) after scaling by degree.

    remaining[i, j] = B0 - (D^{-1} sum_{k<=N} T^k)[i, j]. The consumption
    matrix is stored as computed, before the bottle size enters, so double
    differences are exactly independent of B0.
    """

    initial_volume: float
    remaining: np.ndarray
    n_steps: int
    variant: str
    labels: tuple[str, ...]
    consumption: np.ndarray | None = None

    def consumed(self) -> np.ndarray:
        if self.consumption is not None:
            return self.consumption
        return self.initial_volume - self.remaining


def expected_stay(t: TransitionMatrix, n_steps: int) -> WalkState:
    """Sum of the first n_steps + 1 powers of the walk (the power 0 term
    counts the starting position)."""
    if n_steps < 0:
        raise InputDataError(f"number of steps must be nonnegative, got {n_steps}")
    power = np.eye(t.n)
    acc = _Accumulator(power)
    for _ in range(n_steps):
        power = t.t @ power
        acc.add(power)
    return WalkState(visits=acc.value, n_steps=n_steps, variant=t.variant, labels=t.labels)


def scale_by_degree(state: WalkState, graph: NmaGraph) -> np.ndarray:
    """D^{-1} applied to the visit matrix; symmetric for simple and lazy walks."""
    degrees = _degrees_for(state.labels, graph)
    return state.visits / degrees[:, np.newaxis]


def bottle_board(
    graph: NmaGraph,
    n_steps: int,
    initial_volume: float | None = None,
    variant: str = "simple",
) -> BottleBoard:
    """Run the walk for n_steps, drain one sip per visit, scale by degree.

    The default bottle size is the smallest round value that keeps every
    bottle positive (ceil of the largest consumption plus one); a supplied
    size that leaves a bottle empty is rejected with the deficit listed.
    Double differences are invariant to the bottle size, so the default only
    affects the bar heights, never the covariances.
    """
    if n_steps < 0:
        raise InputDataError(f"number of steps must be nonnegative, got {n_steps}")
    if variant not in ("simple", "lazy"):
        raise InputDataError(f"bottle boards support simple or lazy walks, got {variant!r}")
    tm = transition(graph, variant)
    state = expected_stay(tm, n_steps)
    consumed = scale_by_degree(state, graph)
    if initial_volume is None:
        initial_volume = float(math.ceil(consumed.max()) + 1)
    remaining = initial_volume - consumed
    if (remaining <= 0).any():
        worst = consumed.max()
        short = [
            f"{graph.treatments[i]} (needs > {consumed[i, j]:.3f} for "
            f"{graph.treatments[j]}-walkers)"
            for i, j in zip(*np.nonzero(remaining <= 0))
        ]
        raise InputDataError(
            f"initial volume {initial_volume:g} too small (max consumption "
            f"{worst:.3f}); empty bottles at: " + "; ".join(short)
        )
    return BottleBoard(
        initial_volume=float(initial_volume),
        remaining=remaining,
        n_steps=n_steps,
        variant=variant,
        labels=graph.treatments,
        consumption=consumed,
    )


def diff_of_diffs(board: BottleBoard, graph: NmaGraph) -> np.ndarray:
    """Double differences of consumed volume, X (D^{-1} sum T^k) X', as an
    m x m matrix over the comparison rows.

    For the simple walk on a non-bipartite network this converges to the
    covariance matrix of the network estimates; for the lazy walk, to twice
    the covariance matrix. The bottle size cancels exactly.
    """
    if board.labels != graph.treatments:
        raise InputDataError(
            "bottle board was built on a different network than the one supplied"
        )
    return graph.x @ board.consumed() @ graph.x.T


def _degrees_for(labels: tuple[str, ...], graph: NmaGraph) -> np.ndarray:
    if labels == graph.treatments:
        return graph.d
    try:
        idx = [graph.treatments.index(lab) for lab in labels]
    except ValueError as exc:
        raise InputDataError(f"walk state labels do not match the network: {exc}") from None
    return graph.d[idx]
