"""Algebraic view of a treatment network.

Builds the design matrix X (one +1/-1 row per comparison), the diagonal
weight matrix W of adjusted inverse-variance weights, the Laplacian
L = X'WX, the weighted degree vector d = diag(L), the adjacency A = D - L,
and the column-stochastic transition matrix T = A D^{-1} in its simple,
lazy ((T+I)/2) and absorbing (reference row/column removed) variants.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, MultiArmStudy
from .errors import InputDataError, StructuralError

__all__ = [
    "NmaGraph",
    "TransitionMatrix",
    "BipartiteCheck",
    "build_design_matrix",
    "adjust_multiarm_weights",
    "assemble_graph",
    "transition",
    "is_bipartite",
]

# Edges with aggregated weight below this are treated as absent: they would
# make D^{-1} ill-conditioned without adding information.
WEIGHT_FLOOR = 1e-12


def _frozen(a: np.ndarray) -> np.ndarray:
    a = np.asarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class NmaGraph:
    """Immutable bundle of the network matrices.

    ``x`` is m x n over comparison rows, ``w`` the m x m diagonal weight
    matrix, ``l`` the n x n Laplacian, ``d`` the weighted degree vector,
    ``big_d`` its diagonal matrix and ``a`` the weighted adjacency.
    ``rows`` keeps the (study, treat1, treat2) identity of each row of x.
    """

    treatments: tuple[str, ...]
    rows: tuple[tuple[str, str, str], ...]
    x: np.ndarray
    w: np.ndarray
    l: np.ndarray
    d: np.ndarray
    big_d: np.ndarray
    a: np.ndarray

    def __post_init__(self):
        for name in ("x", "w", "l", "d", "big_d", "a"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def n_treatments(self) -> int:
        return len(self.treatments)

    @property
    def n_comparisons(self) -> int:
        return len(self.rows)

    def weights(self) -> np.ndarray:
        return np.diag(self.w).copy()

    def index_of(self, treatment: str) -> int:
        try:
            return self.treatments.index(treatment)
        except ValueError:
            raise InputDataError(f"unknown treatment label {treatment!r}") from None


@dataclass(frozen=True)
class TransitionMatrix:
    """Column-stochastic diffusion operator over the network nodes.

    ``labels`` names the rows/columns of ``t``; for the absorbing variant the
    reference node is removed and the columns of ``t`` sum to less than one.
    ``d`` carries the (unreduced) weighted degrees of the retained nodes and
    ``x`` the design matrix restricted to their columns, so series based on
    this operator need no further bookkeeping.
    """

    t: np.ndarray
    variant: str
    labels: tuple[str, ...]
    d: np.ndarray
    x: np.ndarray
    reference: str | None = None

    def __post_init__(self):
        for name in ("t", "d", "x"):
            object.__setattr__(self, name, _frozen(getattr(self, name)))

    @property
    def n(self) -> int:
        return self.t.shape[0]


@dataclass(frozen=True)
class BipartiteCheck:
    """Two-coloring witness (bipartite) or odd-cycle witness (not bipartite)."""

    bipartite: bool
    coloring: dict[str, int] | None = None
    odd_cycle: tuple[str, ...] | None = None

    def __bool__(self) -> bool:
        return self.bipartite


def build_design_matrix(dataset: Dataset) -> np.ndarray:
    """Design matrix with one row per comparison: +1 at treat1, -1 at treat2.

    Rows follow dataset order, columns follow ``dataset.treatments``, so two
    studies comparing the same pair contribute identical rows.
    """
    pos = {t: i for i, t in enumerate(dataset.treatments)}
    x = np.zeros((dataset.n_comparisons, dataset.n_treatments))
    for r, c in enumerate(dataset.comparisons):
        x[r, pos[c.treat1]] = 1.0
        x[r, pos[c.treat2]] = -1.0
    return x


def adjust_multiarm_weights(study: MultiArmStudy) -> dict[tuple[str, str], float]:
    """Adjusted contrast variances for one multi-arm study.

    The observed pairwise variances are read as effective resistances between
    the arms. Double-centering recovers the within-study Laplacian

        L_s = pinv(-1/2 * J' V J'),   J' = I - 11'/m,

    whose negated off-diagonal entries are the adjusted weights. Returns
    {(arm_i, arm_j): 1/weight} for i < j in arm order; a recovered weight of
    zero maps to an infinite variance (the contrast carries no information
    beyond the other contrasts of the study).

    Raises InputDataError when the variance matrix is inconsistent, i.e. a
    recovered weight is negative beyond tolerance.
    """
    v = study.pairwise_variances
    m = len(study.arms)
    if m == 2:
        return {(study.arms[0], study.arms[1]): float(v[0, 1])}
    centering = np.eye(m) - np.ones((m, m)) / m
    gram = -0.5 * centering @ v @ centering
    ones = np.ones((m, m))
    try:
        l_s = np.linalg.inv(gram + ones / m) - ones / m
    except np.linalg.LinAlgError:
        raise InputDataError(
            f"study {study.study_id!r}: inconsistent variance matrix "
            "(double-centered Gram matrix is singular)"
        ) from None
    l_s = (l_s + l_s.T) / 2
    out: dict[tuple[str, str], float] = {}
    for i in range(m):
        for j in range(i + 1, m):
            weight = -l_s[i, j]
            if weight < -1e-10:
                raise InputDataError(
                    f"study {study.study_id!r}: inconsistent variance matrix "
                    f"(recovered weight {weight:.3e} for "
                    f"{study.arms[i]}:{study.arms[j]} is negative)"
                )
            if weight < WEIGHT_FLOOR:
                weight = 0.0
            out[(study.arms[i], study.arms[j])] = 1.0 / weight if weight else np.inf
    return out


def _row_weights(dataset: Dataset) -> np.ndarray:
    weights = 1.0 / dataset.standard_errors() ** 2
    for study in dataset.multi_arm_studies():
        adjusted = adjust_multiarm_weights(study)
        for r, c in enumerate(dataset.comparisons):
            if c.study_id != study.study_id:
                continue
            v_star = adjusted.get((c.treat1, c.treat2))
            if v_star is None:
                v_star = adjusted[(c.treat2, c.treat1)]
            weights[r] = 0.0 if np.isinf(v_star) else 1.0 / v_star
    return weights


def _components(labels: tuple[str, ...], a: np.ndarray) -> list[list[str]]:
    n = len(labels)
    support = a > WEIGHT_FLOOR
    unseen = set(range(n))
    comps = []
    while unseen:
        root = min(unseen)
        queue = deque([root])
        unseen.discard(root)
        comp = [root]
        while queue:
            u = queue.popleft()
            for v in np.flatnonzero(support[u]):
                if v in unseen:
                    unseen.discard(int(v))
                    comp.append(int(v))
                    queue.append(int(v))
        comps.append(sorted(labels[i] for i in comp))
    return comps


def assemble_graph(dataset: Dataset) -> NmaGraph:
    """Build the full algebraic view of the network.

    Weights are inverse variances, adjusted within multi-arm studies. The
    network must be connected over positive-weight edges; comparisons whose
    (adjusted) weight falls below the floor are rejected.
    """
    x = build_design_matrix(dataset)
    weights = _row_weights(dataset)
    for r, wt in enumerate(weights):
        if wt < WEIGHT_FLOOR:
            c = dataset.comparisons[r]
            raise InputDataError(
                f"zero-weight edge: study {c.study_id!r} comparison "
                f"{c.treat1}:{c.treat2} has weight {wt:.3e} below {WEIGHT_FLOOR:g}"
            )
    w = np.diag(weights)
    l = x.T @ w @ x
    l = (l + l.T) / 2
    d = np.diag(l).copy()
    big_d = np.diag(d)
    a = big_d - l
    np.fill_diagonal(a, 0.0)
    a[np.abs(a) <= WEIGHT_FLOOR] = 0.0

    comps = _components(dataset.treatments, a)
    if len(comps) > 1:
        listing = " / ".join("{" + ", ".join(c) + "}" for c in comps)
        raise StructuralError(
            f"disconnected network: {len(comps)} components: {listing}"
        )
    return NmaGraph(
        treatments=dataset.treatments,
        rows=dataset.row_keys(),
        x=x,
        w=w,
        l=l,
        d=d,
        big_d=big_d,
        a=a,
    )


def transition(
    graph: NmaGraph, variant: str = "simple", reference: str | None = None
) -> TransitionMatrix:
    """Transition matrix T = A D^{-1} of the diffusion walk.

    ``lazy`` halves every move and keeps the other half in place: (T + I)/2.
    ``absorbing`` removes the reference node's row and column from T (and the
    corresponding entries of d and column of X), which makes every walk end
    at the reference and the power series of T finite.
    """
    if variant not in ("simple", "lazy", "absorbing"):
        raise InputDataError(f"unknown walk variant {variant!r}")
    if variant == "absorbing":
        if reference is None:
            raise InputDataError("absorbing variant requires a reference treatment")
    elif reference is not None:
        raise InputDataError("reference is only meaningful for the absorbing variant")

    t = graph.a / graph.d[np.newaxis, :]
    if variant == "simple":
        return TransitionMatrix(t, "simple", graph.treatments, graph.d, graph.x)
    if variant == "lazy":
        t = (t + np.eye(graph.n_treatments)) / 2
        return TransitionMatrix(t, "lazy", graph.treatments, graph.d, graph.x)
    r = graph.index_of(reference)
    keep = [i for i in range(graph.n_treatments) if i != r]
    labels = tuple(graph.treatments[i] for i in keep)
    return TransitionMatrix(
        t[np.ix_(keep, keep)],
        "absorbing",
        labels,
        graph.d[keep],
        graph.x[:, keep],
        reference=reference,
    )


def is_bipartite(graph: NmaGraph) -> BipartiteCheck:
    """Breadth-first two-coloring of the positive-weight edge support.

    Returns the coloring when it exists, otherwise an odd cycle found at the
    first conflicting edge.
    """
    n = graph.n_treatments
    support = graph.a > WEIGHT_FLOOR
    color = {0: 0}
    parent: dict[int, int | None] = {0: None}
    queue = deque([0])
    while queue:
        u = queue.popleft()
        for v in map(int, np.flatnonzero(support[u])):
            if v not in color:
                color[v] = 1 - color[u]
                parent[v] = u
                queue.append(v)
            elif color[v] == color[u]:
                return BipartiteCheck(
                    False, odd_cycle=_odd_cycle(graph.treatments, parent, u, v)
                )
    coloring = {graph.treatments[i]: c for i, c in color.items()}
    return BipartiteCheck(True, coloring=coloring)


def _odd_cycle(labels, parent, u, v) -> tuple[str, ...]:
    # Walk both endpoints of the conflicting edge up to their lowest common
    # ancestor; the two paths plus the edge form a cycle of odd length.
    path_u, path_v = [u], [v]
    seen = {u: 0}
    node = u
    while parent[node] is not None:
        node = parent[node]
        seen[node] = len(path_u)
        path_u.append(node)
    node = v
    while node not in seen:
        node = parent[node]
        path_v.append(node)
    cycle = path_u[: seen[node] + 1] + list(reversed(path_v[:-1]))
    return tuple(labels[i] for i in cycle)
