"""Covariance and hat matrices of the network estimates, with and without
pseudoinversion.

The dense route computes C = X L+ X' through the shifted-inverse identity
L+ = (L + J/n)^{-1} - J/n, exact on connected networks. The series routes
avoid (pseudo)inversion entirely and evaluate

    C = f * X D^{-1} sum_i (M^i X'),

where the operator M and the leading factor f depend on the walk: the lazy
walk (T+I)/2 and the centered lazy walk (T+I)/2 - T_inf carry f = 1/2, the
simple walk T (non-bipartite networks only) and the reduced absorbing walk
T_r carry f = 1. Multiplying by X' before summing is what makes the sums
converge: the rank-one limit of the walk annihilates X'. The hat matrix is
H = C W for the same truncation, and the treatment-effect estimates follow
from partial sums of the same series.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diffusion import _Accumulator
from .errors import InputDataError, NonConvergenceError, StructuralError
from .graphs import NmaGraph, is_bipartite, transition

__all__ = [
    "CovarianceMatrix",
    "HatMatrix",
    "EstimationTrace",
    "NmaSummary",
    "laplacian_pseudoinverse",
    "covariance_oracle",
    "covariance_series_simple",
    "covariance_series_lazy",
    "covariance_series_centered",
    "covariance_series_absorbing",
    "covariance",
    "hat_matrix",
    "estimate_iterative",
    "nma_summary",
]

DEFAULT_TOL = 1e-10
DEFAULT_MAX_STEPS = 100_000

# Tolerance for the internal agreement check between the simple and lazy
# reduced walks of the absorbing route.
ABSORBING_AGREEMENT_TOL = 1e-7


@dataclass(frozen=True)
class CovarianceMatrix:
    """m x m covariance of the fitted contrasts, over comparison rows."""

    c: np.ndarray
    method: str
    steps_used: int
    residual: float
    rows: tuple[tuple[str, str, str], ...]


@dataclass(frozen=True)
class HatMatrix:
    """m x m projection mapping observed onto consistent fitted contrasts."""

    h: np.ndarray
    method: str
    steps_used: int
    residual: float
    rows: tuple[tuple[str, str, str], ...]


@dataclass(frozen=True)
class EstimationTrace:
    """Iterative fits y_hat_N with squared distances to the converged fit.

    q0 is the squared distance of the raw observations from the fit;
    q_steps[N] the squared distance of y_hat_N.
    """

    y: np.ndarray
    y_hat_steps: tuple[np.ndarray, ...]
    q0: float
    q_steps: tuple[float, ...]
    variant: str
    reference: str | None
    rows: tuple[tuple[str, str, str], ...]

    @property
    def n_steps(self) -> int:
        return len(self.y_hat_steps) - 1

    @property
    def final(self) -> np.ndarray:
        return self.y_hat_steps[-1]


@dataclass(frozen=True)
class SummaryRow:
    study_id: str
    treat1: str
    treat2: str
    te: float
    te_nma: float
    se_nma: float


@dataclass(frozen=True)
class NmaSummary:
    """Per-comparison network estimates plus basic contrasts vs the reference."""

    rows: tuple[SummaryRow, ...]
    basic: tuple[tuple[str, float, float], ...]  # (treatment, estimate, se)
    reference: str
    method: str
    steps_used: int
    residual: float


def laplacian_pseudoinverse(l: np.ndarray) -> np.ndarray:
    """Moore-Penrose pseudoinverse of a connected network Laplacian via
    (L + J/n)^{-1} - J/n; raises StructuralError when the shift is singular
    (the ones vector is not the whole null space, i.e. disconnection)."""
    l = np.asarray(l, dtype=float)
    n = l.shape[0]
    shift = np.ones((n, n)) / n
    try:
        inv = np.linalg.inv(l + shift)
    except np.linalg.LinAlgError:
        raise StructuralError(
            "Laplacian shift is singular: the network is not connected"
        ) from None
    return inv - shift


def covariance_oracle(graph: NmaGraph) -> CovarianceMatrix:
    """Dense reference value C = X L+ X'."""
    lplus = laplacian_pseudoinverse(graph.l)
    c = graph.x @ lplus @ graph.x.T
    c = (c + c.T) / 2
    return CovarianceMatrix(c=c, method="oracle", steps_used=0, residual=0.0, rows=graph.rows)


def _series_operator(graph: NmaGraph, method: str, reference: str | None):
    """Walk operator, leading factor, degrees and design matrix for a method."""
    if method == "simple":
        check = is_bipartite(graph)
        if check.bipartite:
            raise StructuralError(
                "the simple walk does not converge on a bipartite network "
                "(two-coloring exists); use the lazy or absorbing variant"
            )
        tm = transition(graph, "simple")
        return tm.t, 1.0, tm.d, tm.x
    if method == "lazy":
        tm = transition(graph, "lazy")
        return tm.t, 0.5, tm.d, tm.x
    if method == "centered":
        tm = transition(graph, "lazy")
        d0 = graph.d / graph.d.sum()
        return tm.t - np.outer(d0, np.ones(graph.n_treatments)), 0.5, tm.d, tm.x
    if method == "absorbing":
        tm = transition(graph, "absorbing", reference)
        return tm.t, 1.0, tm.d, tm.x
    raise InputDataError(f"unknown series method {method!r}")


def _run_series(operator, factor, d, x, tol, max_steps, method):
    """Accumulate f * X D^{-1} sum_i (M^i X') until the last increment's
    sup-norm falls below tol. Returns (matrix, steps_used, residual)."""
    if tol <= 0:
        raise InputDataError(f"tolerance must be positive, got {tol}")
    if max_steps < 1:
        raise InputDataError(f"step cap must be at least 1, got {max_steps}")
    left = factor * (x / d[np.newaxis, :])  # f * X D^{-1}
    term = x.T.copy()
    acc = _Accumulator(left @ term)
    for k in range(1, max_steps + 1):
        term = operator @ term
        delta = left @ term
        acc.add(delta)
        residual = float(np.abs(delta).max())
        if residual < tol:
            return acc.value, k, residual
    raise NonConvergenceError(
        f"{method} series did not converge within {max_steps} steps "
        f"(last increment {residual:.3e}, tolerance {tol:g})",
        method=method,
        steps=max_steps,
        residual=residual,
    )


def _series_covariance(graph, method, tol, max_steps, reference) -> CovarianceMatrix:
    operator, factor, d, x = _series_operator(graph, method, reference)
    c, steps, residual = _run_series(operator, factor, d, x, tol, max_steps, method)
    if method == "absorbing":
        # The simple and lazy reduced walks must agree on the result; run the
        # lazy one as an internal cross-check.
        lazy_reduced = (operator + np.eye(operator.shape[0])) / 2
        c_lazy, _, _ = _run_series(
            lazy_reduced, 0.5, d, x, tol, max_steps, "absorbing-lazy"
        )
        gap = float(np.abs(c - c_lazy).max())
        if gap > ABSORBING_AGREEMENT_TOL:
            raise NonConvergenceError(
                f"absorbing walk cross-check failed: simple and lazy reduced "
                f"series differ by {gap:.3e}",
                method="absorbing",
                steps=steps,
                residual=gap,
            )
    return CovarianceMatrix(
        c=c, method=f"series-{method}", steps_used=steps, residual=residual, rows=graph.rows
    )


def covariance_series_simple(
    graph: NmaGraph, tol: float = DEFAULT_TOL, max_steps: int = DEFAULT_MAX_STEPS
) -> CovarianceMatrix:
    """Series route over the simple walk; valid on non-bipartite networks."""
    return _series_covariance(graph, "simple", tol, max_steps, None)


def covariance_series_lazy(
    graph: NmaGraph, tol: float = DEFAULT_TOL, max_steps: int = DEFAULT_MAX_STEPS
) -> CovarianceMatrix:
    """Series route over the lazy walk; valid on every connected network."""
    return _series_covariance(graph, "lazy", tol, max_steps, None)


def covariance_series_centered(
    graph: NmaGraph, tol: float = DEFAULT_TOL, max_steps: int = DEFAULT_MAX_STEPS
) -> CovarianceMatrix:
    """Series route over the centered lazy walk. The centered powers form a
    convergent matrix series on their own (its limit is finite but not null),
    so this variant sums the matrix powers first and applies the design
    matrix afterwards."""
    operator, factor, d, x = _series_operator(graph, "centered", None)
    if tol <= 0:
        raise InputDataError(f"tolerance must be positive, got {tol}")
    if max_steps < 1:
        raise InputDataError(f"step cap must be at least 1, got {max_steps}")
    left = factor * (x / d[np.newaxis, :])
    power = np.eye(operator.shape[0])
    matrix_sum = _Accumulator(power)
    for k in range(1, max_steps + 1):
        power = operator @ power
        matrix_sum.add(power)
        residual = float(np.abs(left @ power @ x.T).max())
        if residual < tol:
            c = left @ matrix_sum.value @ x.T
            return CovarianceMatrix(
                c=c,
                method="series-centered",
                steps_used=k,
                residual=residual,
                rows=graph.rows,
            )
    raise NonConvergenceError(
        f"centered series did not converge within {max_steps} steps "
        f"(last increment {residual:.3e}, tolerance {tol:g})",
        method="centered",
        steps=max_steps,
        residual=residual,
    )


def covariance_series_absorbing(
    graph: NmaGraph,
    reference: str,
    tol: float = DEFAULT_TOL,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> CovarianceMatrix:
    """Series route over the walk with the reference node removed. The walk
    dies out at the reference, so the plain matrix series is finite and no
    halving factor appears; the lazy reduced walk is run alongside and must
    agree with it."""
    return _series_covariance(graph, "absorbing", tol, max_steps, reference)


def covariance(
    graph: NmaGraph,
    method: str = "lazy",
    tol: float = DEFAULT_TOL,
    max_steps: int = DEFAULT_MAX_STEPS,
    reference: str | None = None,
) -> CovarianceMatrix:
    """Dispatch over {oracle, simple, lazy, centered, absorbing}."""
    if method == "oracle":
        return covariance_oracle(graph)
    if method == "centered":
        return covariance_series_centered(graph, tol, max_steps)
    if method == "absorbing":
        if reference is None:
            raise InputDataError("absorbing method requires a reference treatment")
        return covariance_series_absorbing(graph, reference, tol, max_steps)
    if method in ("simple", "lazy"):
        return _series_covariance(graph, method, tol, max_steps, None)
    raise InputDataError(f"unknown covariance method {method!r}")


def hat_matrix(
    graph: NmaGraph,
    method: str = "lazy",
    tol: float = DEFAULT_TOL,
    max_steps: int = DEFAULT_MAX_STEPS,
    reference: str | None = None,
) -> HatMatrix:
    """H = C W for the same series truncation as the covariance route.

    With unit weights H equals C entrywise; at convergence H is the weighted
    least squares projection (H H = H, H X = X) and its diagonal lies in
    [0, 1].
    """
    cov = covariance(graph, method, tol, max_steps, reference)
    return HatMatrix(
        h=cov.c @ graph.w,
        method=cov.method,
        steps_used=cov.steps_used,
        residual=cov.residual,
        rows=graph.rows,
    )


def estimate_iterative(
    graph: NmaGraph,
    y: np.ndarray,
    method: str = "lazy",
    n_steps: int = 25,
    reference: str | None = None,
) -> EstimationTrace:
    """Treatment-effect fits from truncated series, one vector per step.

    y_hat_N = f X D^{-1} sum_{i<=N} (M^i X') W y. Already at N = 0 the
    observations collapse onto consistent relative effects: rows of X that
    represent the same comparison get identical fitted values. The distance
    of each y_hat_N from the exact fit (dense-oracle hat matrix applied to y)
    is reported as Q_N = ||y_hat_N - y_hat||^2.
    """
    y = np.asarray(y, dtype=float)
    if y.shape != (graph.n_comparisons,):
        raise InputDataError(
            f"observed effects have shape {y.shape}, expected ({graph.n_comparisons},)"
        )
    if method not in ("simple", "lazy", "absorbing"):
        raise InputDataError(f"unknown estimation method {method!r}")
    if method == "absorbing" and reference is None:
        raise InputDataError("absorbing method requires a reference treatment")
    if n_steps < 0:
        raise InputDataError(f"number of steps must be nonnegative, got {n_steps}")

    operator, factor, d, x = _series_operator(graph, method, reference)
    y_hat = hat_matrix(graph, "oracle").h @ y
    q0 = float(((y - y_hat) ** 2).sum())

    seed = x.T @ (graph.weights() * y)
    term = seed.copy()
    running = seed.copy()
    fits = [factor * (x @ (running / d))]
    for _ in range(n_steps):
        term = operator @ term
        running = running + term
        fits.append(factor * (x @ (running / d)))
    q_steps = tuple(float(((f - y_hat) ** 2).sum()) for f in fits)
    return EstimationTrace(
        y=y,
        y_hat_steps=tuple(fits),
        q0=q0,
        q_steps=q_steps,
        variant=method,
        reference=reference,
        rows=graph.rows,
    )


def nma_summary(
    graph: NmaGraph,
    y: np.ndarray,
    reference: str,
    tol: float = DEFAULT_TOL,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> NmaSummary:
    """Network estimates with standard errors, inversion-free.

    Runs the absorbing series once: B = D_r^{-1} sum_i T_r^i is the inverse
    of the reduced Laplacian, so it yields the basic contrasts versus the
    reference (estimates B X_r' W y, standard errors sqrt(diag B)), the
    fitted value of every comparison row, and its standard error
    sqrt(diag(X_r B X_r'))."""
    y = np.asarray(y, dtype=float)
    if y.shape != (graph.n_comparisons,):
        raise InputDataError(
            f"observed effects have shape {y.shape}, expected ({graph.n_comparisons},)"
        )
    tm = transition(graph, "absorbing", reference)
    if tol <= 0:
        raise InputDataError(f"tolerance must be positive, got {tol}")
    if max_steps < 1:
        raise InputDataError(f"step cap must be at least 1, got {max_steps}")
    d_inv = 1.0 / tm.d
    power = np.eye(tm.n)
    acc = _Accumulator(d_inv[:, np.newaxis] * power)
    residual = None
    for k in range(1, max_steps + 1):
        power = tm.t @ power
        delta = d_inv[:, np.newaxis] * power
        acc.add(delta)
        residual = float(np.abs(delta).max())
        if residual < tol:
            break
    else:
        raise NonConvergenceError(
            f"absorbing series did not converge within {max_steps} steps "
            f"(last increment {residual:.3e}, tolerance {tol:g})",
            method="absorbing",
            steps=max_steps,
            residual=residual,
        )
    b = acc.value
    b = (b + b.T) / 2
    beta = b @ (tm.x.T @ (graph.weights() * y))
    fitted = tm.x @ beta
    cov = tm.x @ b @ tm.x.T
    se_rows = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    rows = tuple(
        SummaryRow(
            study_id=key[0],
            treat1=key[1],
            treat2=key[2],
            te=float(y[i]),
            te_nma=float(fitted[i]),
            se_nma=float(se_rows[i]),
        )
        for i, key in enumerate(graph.rows)
    )
    basic = tuple(
        (label, float(beta[i]), float(np.sqrt(max(b[i, i], 0.0))))
        for i, label in enumerate(tm.labels)
    )
    return NmaSummary(
        rows=rows,
        basic=basic,
        reference=reference,
        method="series-absorbing",
        steps_used=k,
        residual=residual,
    )
