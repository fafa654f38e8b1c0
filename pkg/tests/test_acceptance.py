"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s` to see the lines as they
print. Criteria 7 and 8 use bundled synthetic fixtures shaped like the
published datasets; drop real exports at tests/data/dong2013.csv or
tests/data/jalota2011.csv (contrast CSV schema) to run them on the real data
instead.
"""

import time
from pathlib import Path

import numpy as np

from nma_diffuse import (
    assemble_graph,
    bottle_board,
    covariance_oracle,
    covariance_series_absorbing,
    covariance_series_centered,
    covariance_series_lazy,
    covariance_series_simple,
    diff_of_diffs,
    estimate_iterative,
    hat_matrix,
    is_bipartite,
    laplacian_pseudoinverse,
    load_contrasts,
    stationary,
    steps_to_converge,
    transition,
    verify_centered_identity,
)

from _support import (
    cycle_dataset,
    dong_like_dataset,
    near_star_dataset,
    path_dataset,
    random_connected_dataset,
    star_dataset,
    triangle_dataset,
)

DATA_DIR = Path(__file__).parent / "data"

TOY_D = np.diag([2.0, 4.0, 2.0, 3.0, 3.0])
TOY_L = np.array(
    [
        [2, -1, 0, 0, -1],
        [-1, 4, -1, -1, -1],
        [0, -1, 2, -1, 0],
        [0, -1, -1, 3, -1],
        [-1, -1, 0, -1, 3],
    ],
    dtype=float,
)
TOY_T = np.array(
    [
        [0, 1 / 4, 0, 0, 1 / 3],
        [1 / 2, 0, 1 / 2, 1 / 3, 1 / 3],
        [0, 1 / 4, 0, 1 / 3, 0],
        [0, 1 / 4, 1 / 2, 0, 1 / 3],
        [1 / 2, 1 / 4, 0, 1 / 3, 0],
    ]
)


def report(name: str, ok: bool, detail: str = "") -> bool:
    status = "PASS" if ok else "FAIL"
    suffix = f" ({detail})" if detail else ""
    print(f"acceptance {name}: {status}{suffix}")
    return ok


def test_criterion_01_toy_golden_matrices(toy_graph):
    started = time.perf_counter()
    tm = transition(toy_graph, "simple")
    t_inf = stationary(toy_graph).t_infinity()
    expected_t_inf = np.outer([2, 4, 2, 3, 3], np.ones(5)) / 14
    deviations = {
        "D": np.abs(toy_graph.big_d - TOY_D).max(),
        "L": np.abs(toy_graph.l - TOY_L).max(),
        "T": np.abs(tm.t - TOY_T).max(),
    }
    elapsed = time.perf_counter() - started
    ok = (
        all(d <= 1e-12 for d in deviations.values())
        and np.abs(t_inf - expected_t_inf).max() <= 1e-8
        and elapsed < 1.0
    )
    assert report(
        "01 toy-golden-matrices",
        ok,
        f"max dev {max(deviations.values()):.1e}, {elapsed * 1000:.0f} ms",
    )


def test_criterion_02_convergence_count(toy_graph):
    started = time.perf_counter()
    tm = transition(toy_graph, "simple")
    rep = steps_to_converge(tm, stationary(toy_graph).t_infinity(), tol=0.5e-7)
    elapsed = time.perf_counter() - started
    ok = rep.verdict == "converged" and rep.steps == 34 and elapsed < 1.0
    assert report(
        "02 convergence-count", ok, f"steps={rep.steps}, {elapsed * 1000:.0f} ms"
    )


def test_criterion_03_covariance_value(toy_graph):
    lplus = laplacian_pseudoinverse(toy_graph.l)
    e = np.eye(5)
    entry = float((e[0] - e[1]) @ lplus @ (e[0] - e[2]))
    oracle = covariance_oracle(toy_graph).c
    series_dev = np.abs(covariance_series_lazy(toy_graph).c - oracle).max()
    ok = abs(entry - 0.57) <= 0.005 and series_dev <= 1e-7
    assert report(
        "03 covariance-value",
        ok,
        f"C(A:B,A:C)={entry:.4f}, series vs oracle {series_dev:.1e}",
    )


def test_criterion_04_method_equivalence_suite():
    started = time.perf_counter()
    rng = np.random.default_rng(31337)
    worst_c = worst_proj = worst_consistency = 0.0
    diag_ok = True
    unit_case_checked = False
    n_graphs = 104
    for i in range(n_graphs):
        with_multi = i % 2 == 0
        unit_multi = i % 10 == 0
        ds = random_connected_dataset(
            rng, with_multi_arm=with_multi, unit_multi_arm=unit_multi
        )
        g = assemble_graph(ds)
        if unit_multi and ds.multi_arm_studies():
            from nma_diffuse import adjust_multiarm_weights

            adjusted = adjust_multiarm_weights(ds.multi_arm_studies()[0])
            assert all(abs(v - 1.5) < 1e-10 for v in adjusted.values())
            unit_case_checked = True
        oracle = covariance_oracle(g).c
        reference = g.treatments[int(rng.integers(g.n_treatments))]
        for res in (
            covariance_series_lazy(g),
            covariance_series_centered(g),
            covariance_series_absorbing(g, reference),
        ):
            worst_c = max(worst_c, float(np.abs(res.c - oracle).max()))
            h = res.c @ g.w
            worst_c = max(worst_c, float(np.abs(h - oracle @ g.w).max()))
        h = hat_matrix(g, "lazy").h
        worst_proj = max(worst_proj, float(np.abs(h @ h - h).max()))
        worst_consistency = max(worst_consistency, float(np.abs(h @ g.x - g.x).max()))
        diag = np.diag(h)
        diag_ok &= bool((diag >= -1e-10).all() and (diag <= 1 + 1e-10).all())
    elapsed = time.perf_counter() - started
    ok = (
        worst_c <= 1e-7
        and worst_proj <= 1e-8
        and worst_consistency <= 1e-8
        and diag_ok
        and unit_case_checked
        and elapsed < 60.0
    )
    assert report(
        "04 method-equivalence",
        ok,
        f"{n_graphs} graphs, max dev {worst_c:.1e}, H^2-H {worst_proj:.1e}, "
        f"HX-X {worst_consistency:.1e}, {elapsed:.1f} s",
    )


def test_criterion_05_bipartite_dichotomy():
    graphs = [
        star_dataset(3),
        star_dataset(6),
        path_dataset(4),
        path_dataset(6),
        cycle_dataset(4),
        cycle_dataset(6),
    ]
    ok = True
    worst = 0.0
    for ds in graphs:
        g = assemble_graph(ds)
        ok &= is_bipartite(g).bipartite
        limit = stationary(g).t_infinity()
        simple_rep = steps_to_converge(transition(g, "simple"), limit, tol=0.5e-7)
        lazy_rep = steps_to_converge(transition(g, "lazy"), limit, tol=0.5e-7)
        ok &= simple_rep.verdict == "oscillation"
        ok &= lazy_rep.verdict == "converged"
        dev = float(
            np.abs(covariance_series_lazy(g).c - covariance_oracle(g).c).max()
        )
        worst = max(worst, dev)
        ok &= dev <= 1e-7
    assert report(
        "05 bipartite-dichotomy", ok, f"{len(graphs)} graphs, max series dev {worst:.1e}"
    )


def test_criterion_06_triangle_centered_goldens():
    g = assemble_graph(triangle_dataset())
    tm = transition(g, "simple")
    t_inf = stationary(g).t_infinity()
    centered = tm.t - t_inf
    expected_step = np.array([[-2, 1, 1], [1, -2, 1], [1, 1, -2]]) / 6
    expected_sum = np.array([[7, 1, 1], [1, 7, 1], [1, 1, 7]]) / 9
    series = np.linalg.inv(np.eye(3) - centered)  # closed form of the sum
    partial = np.eye(3)
    power = np.eye(3)
    for _ in range(200):
        power = centered @ power
        partial = partial + power
    dev_step = np.abs(centered - expected_step).max()
    dev_sum = max(
        np.abs(partial - expected_sum).max(), np.abs(series - expected_sum).max()
    )
    dev_identity = max(
        verify_centered_identity(tm, t_inf, i) for i in range(1, 11)
    )
    ok = dev_step <= 1e-8 and dev_sum <= 1e-8 and dev_identity <= 1e-9
    assert report(
        "06 triangle-centered",
        ok,
        f"step {dev_step:.1e}, sum {dev_sum:.1e}, identity {dev_identity:.1e}",
    )


def test_criterion_07_iterative_fit_step0_collapse():
    real = DATA_DIR / "dong2013.csv"
    if real.exists():
        ds = load_contrasts(real)
        source = "real export"
    else:
        ds = dong_like_dataset()
        source = "synthetic fixture"
    g = assemble_graph(ds)
    distinct_designs = len({frozenset((c.treat1, c.treat2)) for c in ds.comparisons})
    trace = estimate_iterative(g, ds.effects(), "lazy", 200)
    distinct_step0 = np.unique(np.round(trace.y_hat_steps[0], 9)).size
    q = np.array(trace.q_steps)
    first_below = next((i for i, v in enumerate(q) if v < 1e-10), None)
    ok = (
        ds.n_comparisons == 82
        and distinct_designs == 10
        and distinct_step0 == 10
        and first_below is not None
        and first_below <= 200
    )
    assert report(
        "07 step0-collapse",
        ok,
        f"{source}: {ds.n_comparisons} rows, {distinct_step0} distinct step-0 "
        f"values, Q<1e-10 at step {first_below}",
    )


def test_criterion_08_reference_choice_effect():
    real = DATA_DIR / "jalota2011.csv"
    if real.exists():
        ds = load_contrasts(real)
        source = "real export"
        hub = None  # picked below as the highest-degree node
    else:
        ds = near_star_dataset()
        source = "synthetic fixture"
        hub = "hub"
    g = assemble_graph(ds)
    assert not is_bipartite(g).bipartite
    if hub is None:
        hub = g.treatments[int(np.argmax(g.d))]
    leaf = g.treatments[int(np.argmin(g.d))]
    steps_simple = covariance_series_simple(g).steps_used
    steps_lazy = covariance_series_lazy(g).steps_used
    steps_hub = covariance_series_absorbing(g, hub).steps_used
    steps_leaf = covariance_series_absorbing(g, leaf).steps_used
    ratio = steps_simple / steps_lazy
    ok = ratio >= 50 and steps_hub < steps_leaf
    assert report(
        "08 reference-choice",
        ok,
        f"{source}: simple {steps_simple}, lazy {steps_lazy} (x{ratio:.0f}), "
        f"absorbing {hub}={steps_hub} vs {leaf}={steps_leaf}",
    )


def test_criterion_09_walkers_model(toy_graph):
    board = bottle_board(toy_graph, 50)
    labels = board.labels
    a, b, c = labels.index("A"), labels.index("B"), labels.index("C")
    red_minus_yellow_a = board.remaining[a, c] - board.remaining[a, a]
    red_minus_yellow_b = board.remaining[b, c] - board.remaining[b, a]
    board_5k = bottle_board(toy_graph, 5000)
    dd_dev = np.abs(
        diff_of_diffs(board_5k, toy_graph) - covariance_oracle(toy_graph).c
    ).max()
    small = bottle_board(toy_graph, 50, initial_volume=10.0)
    large = bottle_board(toy_graph, 50, initial_volume=12345.0)
    invariant = np.array_equal(
        diff_of_diffs(small, toy_graph), diff_of_diffs(large, toy_graph)
    )
    ok = (
        abs(red_minus_yellow_a - 0.57) <= 0.01
        and abs(red_minus_yellow_b) <= 0.01
        and dd_dev <= 1e-6
        and invariant
    )
    assert report(
        "09 walkers-model",
        ok,
        f"diff at A {red_minus_yellow_a:.4f}, at B {red_minus_yellow_b:.1e}, "
        f"N=5000 dev {dd_dev:.1e}, B0-invariant {invariant}",
    )


def test_criterion_10_symmetry_suite(toy_graph):
    rng = np.random.default_rng(11)
    graphs = [
        toy_graph,
        assemble_graph(triangle_dataset()),
        assemble_graph(star_dataset()),
        assemble_graph(cycle_dataset(4)),
    ]
    graphs += [
        assemble_graph(random_connected_dataset(rng, with_multi_arm=(i == 0)))
        for i in range(3)
    ]
    worst = 0.0
    for g in graphs:
        t_lazy = transition(g, "lazy").t
        d_inv = 1.0 / g.d
        power = np.eye(g.n_treatments)
        total = np.eye(g.n_treatments)
        for _ in range(1000):
            power = t_lazy @ power
            total = total + power
            scaled = d_inv[:, np.newaxis] * total
            worst = max(worst, float(np.abs(scaled - scaled.T).max()))
    ok = worst <= 1e-10
    assert report(
        "10 symmetry-suite", ok, f"{len(graphs)} graphs, k<=1000, max asym {worst:.1e}"
    )
