"""Diffusion of mass over the network: matrix powers, partial sums, limits.

The simple walk T converges to the rank-one limit T_inf = d0 1' on connected
non-bipartite graphs (d0 = degree proportions); on bipartite graphs its
powers oscillate between the two node classes with period two. The lazy walk
(T + I)/2 converges on every connected graph, and the absorbing walk decays
to the zero matrix.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import InputDataError
from .graphs import NmaGraph, TransitionMatrix

__all__ = [
    "SeriesResult",
    "DiffusionTrace",
    "StationaryDistribution",
    "ConvergenceReport",
    "power_series",
    "stationary",
    "diffuse",
    "steps_to_converge",
    "centered_step",
    "verify_centered_identity",
]

DEFAULT_STEP_CAP = 1_000_000

# Oscillation is declared when, over a sliding window, the residual stops
# shrinking while successive iterates alternate (T^k is much closer to
# T^{k-2} than to T^{k-1}).
_OSC_WINDOW = 10
_OSC_DECAY = 0.999
_OSC_ALTERNATION = 0.01

# Plain float64 accumulation is exact enough at network sizes; compensated
# summation kicks in for long series on large matrices.
_KAHAN_DIM = 64


class _Accumulator:
    """Running matrix sum, compensated (Kahan) above _KAHAN_DIM."""

    def __init__(self, first: np.ndarray):
        self.value = first.astype(float, copy=True)
        self._compensate = first.shape[0] > _KAHAN_DIM
        self._carry = np.zeros_like(self.value) if self._compensate else None

    def add(self, term: np.ndarray) -> None:
        if not self._compensate:
            self.value += term
            return
        y = term - self._carry
        t = self.value + y
        self._carry = (t - self.value) - y
        self.value = t


def _matrix_of(t) -> np.ndarray:
    if isinstance(t, TransitionMatrix):
        return np.asarray(t.t, dtype=float)
    m = np.asarray(t, dtype=float)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise InputDataError(f"expected a square matrix, got shape {m.shape}")
    return m


@dataclass(frozen=True)
class SeriesResult:
    """k-th power and partial sum of a matrix geometric series.

    ``residual`` is the sup-norm of M^k - M^{k-1}, or of M^k - limit when a
    limit is supplied; None for k = 0 without a limit.
    """

    power: np.ndarray
    partial_sum: np.ndarray
    k: int
    residual: float | None


@dataclass(frozen=True)
class DiffusionTrace:
    """Mass vectors T^k p for k = 0..N."""

    start: np.ndarray
    steps: tuple[np.ndarray, ...]
    variant: str
    labels: tuple[str, ...]

    @property
    def n_steps(self) -> int:
        return len(self.steps) - 1

    def masses(self) -> np.ndarray:
        """Trace as an array of shape (n_steps + 1, n_nodes)."""
        return np.vstack(self.steps)


@dataclass(frozen=True)
class StationaryDistribution:
    """Degree proportions d0 = d / ||d||_1, the limit of the converging walk."""

    d0: np.ndarray
    labels: tuple[str, ...]

    def t_infinity(self) -> np.ndarray:
        """Rank-one limit matrix with every column equal to d0."""
        return np.outer(self.d0, np.ones(len(self.d0)))


@dataclass(frozen=True)
class ConvergenceReport:
    """Outcome of iterating T^k against a limit.

    ``verdict`` is one of "converged", "oscillation", "cap-exceeded".
    ``steps`` is the first k whose successive-difference sup-norm fell below
    the tolerance (None unless converged); ``limit_gap`` the sup-norm distance
    to the supplied limit at the last computed power.
    """

    verdict: str
    steps: int | None
    residual: float
    limit_gap: float
    cap: int
    evidence: dict[str, float] = field(default_factory=dict)

    @property
    def converged(self) -> bool:
        return self.verdict == "converged"


def power_series(m: np.ndarray, k: int, limit: np.ndarray | None = None) -> SeriesResult:
    """M^k and the partial sum I + M + ... + M^k by iterated multiplication."""
    m = _matrix_of(m)
    if k < 0:
        raise InputDataError(f"power must be nonnegative, got {k}")
    power = np.eye(m.shape[0])
    acc = _Accumulator(power)
    previous = None
    for _ in range(k):
        previous = power
        power = m @ power
        acc.add(power)
    if limit is not None:
        residual = float(np.abs(power - limit).max())
    elif previous is not None:
        residual = float(np.abs(power - previous).max())
    else:
        residual = None
    return SeriesResult(power=power, partial_sum=acc.value, k=k, residual=residual)


def stationary(graph: NmaGraph) -> StationaryDistribution:
    d0 = graph.d / graph.d.sum()
    return StationaryDistribution(d0=d0, labels=graph.treatments)


def diffuse(t: TransitionMatrix, p0: np.ndarray, n_steps: int) -> DiffusionTrace:
    """Track the mass distribution T^k p0 for k = 0..n_steps.

    p0 must be a probability vector over the nodes of ``t`` (for the
    absorbing variant: over the non-reference nodes; total mass then decays).
    """
    p0 = np.asarray(p0, dtype=float)
    if p0.shape != (t.n,):
        raise InputDataError(
            f"start distribution has length {p0.shape}, expected ({t.n},)"
        )
    if (p0 < 0).any() or abs(p0.sum() - 1.0) > 1e-9:
        raise InputDataError("start distribution must be nonnegative and sum to 1")
    if n_steps < 0:
        raise InputDataError(f"number of steps must be nonnegative, got {n_steps}")
    steps = [p0]
    p = p0
    for _ in range(n_steps):
        p = t.t @ p
        steps.append(p)
    return DiffusionTrace(
        start=p0, steps=tuple(steps), variant=t.variant, labels=t.labels
    )


def steps_to_converge(
    t: TransitionMatrix | np.ndarray,
    limit: np.ndarray,
    tol: float,
    cap: int = DEFAULT_STEP_CAP,
) -> ConvergenceReport:
    """Smallest k at which the power sequence T^k has stabilized.

    Stabilization means the successive-difference sup-norm ||T^k - T^(k-1)||
    drops below ``tol``; the distance to ``limit`` at that point is reported
    as ``limit_gap``. Oscillation (the period-two signature of bipartite
    walks) is detected when the residual stops decaying over a sliding
    window of ten steps while T^k stays far closer to T^(k-2) than to
    T^(k-1); it is reported distinctly from merely slow convergence.
    """
    if tol <= 0:
        raise InputDataError(f"tolerance must be positive, got {tol}")
    m = _matrix_of(t)
    limit = np.asarray(limit, dtype=float)
    if limit.shape != m.shape:
        raise InputDataError(
            f"limit shape {limit.shape} does not match matrix shape {m.shape}"
        )
    power_prev2 = None
    power_prev = np.eye(m.shape[0])
    power = m.copy()
    residuals = [float(np.abs(power - power_prev).max())]
    for k in range(1, cap + 1):
        residual = residuals[-1]
        if residual < tol:
            return ConvergenceReport(
                verdict="converged",
                steps=k,
                residual=residual,
                limit_gap=float(np.abs(power - limit).max()),
                cap=cap,
            )
        if power_prev2 is not None and k > _OSC_WINDOW:
            alternation = float(np.abs(power - power_prev2).max())
            window_ratio = residual / residuals[-1 - _OSC_WINDOW]
            if window_ratio > _OSC_DECAY and alternation < _OSC_ALTERNATION * residual:
                return ConvergenceReport(
                    verdict="oscillation",
                    steps=None,
                    residual=residual,
                    limit_gap=float(np.abs(power - limit).max()),
                    cap=cap,
                    evidence={
                        "step": k,
                        "alternation_gap": alternation,
                        "residual": residual,
                        "window_ratio": window_ratio,
                    },
                )
        power_prev2 = power_prev
        power_prev = power
        power = m @ power
        residuals.append(float(np.abs(power - power_prev).max()))
    return ConvergenceReport(
        verdict="cap-exceeded",
        steps=None,
        residual=residuals[-1],
        limit_gap=float(np.abs(power - limit).max()),
        cap=cap,
    )


def centered_step(t: TransitionMatrix | np.ndarray, t_inf: np.ndarray) -> np.ndarray:
    """The centered operator T - T_inf, whose plain powers form a convergent
    series even though the powers of T itself sum divergently."""
    m = _matrix_of(t)
    t_inf = np.asarray(t_inf, dtype=float)
    if t_inf.shape != m.shape:
        raise InputDataError(
            f"limit shape {t_inf.shape} does not match matrix shape {m.shape}"
        )
    return m - t_inf


def verify_centered_identity(
    t: TransitionMatrix | np.ndarray, t_inf: np.ndarray, i: int
) -> float:
    """Sup-norm deviation of (T - T_inf)^i from T^i - T_inf (zero in exact
    arithmetic for i >= 1)."""
    if i < 1:
        raise InputDataError(f"power must be at least 1, got {i}")
    m = _matrix_of(t)
    centered = centered_step(m, t_inf)
    lhs = np.linalg.matrix_power(centered, i)
    rhs = np.linalg.matrix_power(m, i) - np.asarray(t_inf, dtype=float)
    return float(np.abs(lhs - rhs).max())
