"""Command-line front end.

    nma-diffuse <diffuse|hat|estimate|walk|converge|validate> --input FILE ...

Every command reads a contrast CSV (or an arm-level CSV together with
--measure), assembles the network, and writes delimited output plus SVG
figures into the --out directory. Identical inputs and flags produce
byte-identical CSV/JSON output.

Exit codes: 0 success, 2 input error, 3 non-convergence (including detected
oscillation), 4 structural error (disconnected network, simple walk on a
bipartite network).
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np

from . import diffusion, estimator, ingest, plots, report, walkers
from .errors import InputDataError, NonConvergenceError, StructuralError
from .graphs import assemble_graph, is_bipartite, transition

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NONCONVERGENCE = 3
EXIT_STRUCTURAL = 4

ENV_MAX_STEPS = "NMA_DIFFUSE_MAX_STEPS"

SERIES_TOL = 1e-10
POWER_TOL = 0.5e-7


def _env_cap(default: int) -> int:
    raw = os.environ.get(ENV_MAX_STEPS)
    if raw is None:
        return default
    try:
        cap = int(raw)
    except ValueError:
        raise InputDataError(f"{ENV_MAX_STEPS}={raw!r} is not an integer") from None
    if cap < 1:
        raise InputDataError(f"{ENV_MAX_STEPS} must be at least 1, got {cap}")
    return cap


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="nma-diffuse",
        description="Network meta-analysis through random-walk diffusion series.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, steps_default=None, steps_help="step count"):
        p.add_argument("--input", required=True, type=Path, help="input CSV file")
        p.add_argument(
            "--variant",
            choices=["simple", "lazy", "absorbing", "centered"],
            help="walk variant",
        )
        p.add_argument("--ref", help="reference treatment (absorbing walks)")
        p.add_argument("--steps", type=int, default=steps_default, help=steps_help)
        p.add_argument("--tol", type=float, help="convergence tolerance")
        p.add_argument(
            "--format", choices=["csv", "json", "svg"], default="csv",
            help="table format; svg writes figures only",
        )
        p.add_argument("--out", type=Path, default=Path("nma_out"), help="output directory")
        p.add_argument(
            "--measure", choices=["or", "rr"],
            help="effect measure for arm-level input (log odds/risk ratio)",
        )

    p = sub.add_parser("diffuse", help="trace the mass distribution of the walk")
    common(p, steps_default=6, steps_help="number of diffusion steps (default 6)")
    p.add_argument(
        "--start", default="uniform",
        help="start node label, or 'uniform' (default)",
    )
    p.add_argument(
        "--proportions", action="store_true",
        help="one stacked probability plot instead of per-step network frames",
    )

    p = sub.add_parser("hat", help="hat and covariance matrices by power series")
    common(p, steps_help="series step cap (default 100000)")
    p.add_argument(
        "--oracle", action="store_true",
        help="also compute the dense pseudoinverse result and the deviation",
    )

    p = sub.add_parser("estimate", help="iterative treatment-effect estimates")
    common(p, steps_default=25, steps_help="iteration steps to trace (default 25)")

    p = sub.add_parser("walk", help="walkers-and-drinks bottle board")
    common(p, steps_default=50, steps_help="walk steps (default 50)")
    p.add_argument(
        "--check", action="store_true",
        help="print the deviation of the double differences from the oracle covariance",
    )

    p = sub.add_parser("converge", help="steps to the limit distribution per variant")
    common(p, steps_help="power step cap (default 1000000)")

    p = sub.add_parser("validate", help="load a file and report the network structure")
    common(p)
    return parser


def _check_reference(args, variant: str) -> None:
    # A reference node belongs to the absorbing walk and nothing else.
    if variant == "absorbing" and not args.ref:
        raise InputDataError("the absorbing variant requires --ref")
    if variant != "absorbing" and args.ref:
        raise InputDataError("--ref is only meaningful with --variant absorbing")


def _load_dataset(args):
    kind = ingest.sniff_format(args.input)
    if kind == "contrast":
        if args.measure:
            print("note: --measure ignored for contrast-format input", file=sys.stderr)
        return ingest.load_contrasts(args.input)
    arms = ingest.load_arms(args.input)
    measure = ingest.EffectMeasure(args.measure or "or")
    return ingest.contrasts_from_arms(arms, measure)


def _start_vector(tm, start: str) -> np.ndarray:
    n = len(tm.labels)
    if start == "uniform":
        return np.full(n, 1.0 / n)
    if start not in tm.labels:
        if tm.reference == start:
            raise InputDataError(
                f"start node {start!r} is the absorbing reference; pick another node"
            )
        raise InputDataError(f"unknown start node {start!r}")
    p0 = np.zeros(n)
    p0[tm.labels.index(start)] = 1.0
    return p0


def _limit_for(tm, graph) -> np.ndarray:
    if tm.variant == "absorbing":
        return np.zeros((tm.n, tm.n))
    d0 = graph.d / graph.d.sum()
    return np.outer(d0, np.ones(len(d0)))


def _describe(rep: diffusion.ConvergenceReport) -> str:
    if rep.verdict == "converged":
        return (
            f"converged in {rep.steps} steps "
            f"(residual {rep.residual:.3e}, gap to limit {rep.limit_gap:.3e})"
        )
    if rep.verdict == "oscillation":
        ev = rep.evidence
        return (
            "oscillation detected at step {step:.0f}: period-2 alternation "
            "(||T^k - T^(k-2)|| = {alternation_gap:.3e} vs residual "
            "||T^k - T^(k-1)|| = {residual:.3e})".format(**ev)
        )
    return f"no convergence within cap {rep.cap} (residual {rep.residual:.3e})"


def cmd_diffuse(args) -> int:
    dataset = _load_dataset(args)
    graph = assemble_graph(dataset)
    variant = args.variant or "simple"
    if variant == "centered":
        raise InputDataError("diffuse supports simple, lazy and absorbing walks")
    _check_reference(args, variant)
    tm = transition(graph, variant, args.ref if variant == "absorbing" else None)
    p0 = _start_vector(tm, args.start)
    trace = diffusion.diffuse(tm, p0, args.steps)

    written = []
    if args.format == "csv":
        written.append(report.write_trace_csv(args.out / "trace.csv", trace))
    elif args.format == "json":
        written.append(
            report.write_json(args.out / "trace.json", report.trace_payload(trace))
        )
    if args.proportions:
        written.append(
            plots.stacked_trace_figure(trace, args.out / "diffusion_stacked.svg")
        )
    else:
        written.extend(plots.diffusion_frames(trace, graph, args.out))
    for path in written:
        print(path)

    rep = diffusion.steps_to_converge(
        tm, _limit_for(tm, graph), tol=args.tol or POWER_TOL, cap=_env_cap(1_000_000)
    )
    print(f"{variant} walk: {_describe(rep)}")
    return EXIT_OK if rep.converged else EXIT_NONCONVERGENCE


def _hat_pair(graph, method, tol, max_steps, reference):
    cov = estimator.covariance(graph, method, tol, max_steps, reference)
    hat = estimator.HatMatrix(
        h=cov.c @ graph.w,
        method=cov.method,
        steps_used=cov.steps_used,
        residual=cov.residual,
        rows=cov.rows,
    )
    return cov, hat


def cmd_hat(args) -> int:
    if args.format == "svg":
        raise InputDataError("hat emits tables; choose --format csv or json")
    dataset = _load_dataset(args)
    graph = assemble_graph(dataset)
    method = args.variant or "lazy"
    _check_reference(args, method)
    tol = args.tol or SERIES_TOL
    max_steps = args.steps if args.steps is not None else _env_cap(estimator.DEFAULT_MAX_STEPS)
    cov, hat = _hat_pair(graph, method, tol, max_steps, args.ref)

    labels = [report.row_key(k) for k in graph.rows]
    run = {
        "command": "hat",
        "method": cov.method,
        "steps": cov.steps_used,
        "residual": cov.residual,
    }
    written = []
    if args.format == "csv":
        written.append(report.write_matrix_csv(args.out / "covariance.csv", cov.c, labels))
        written.append(report.write_matrix_csv(args.out / "hat.csv", hat.h, labels))
    else:
        written.append(
            report.write_json(args.out / "covariance.json", report.matrix_payload(cov))
        )
        written.append(report.write_json(args.out / "hat.json", report.matrix_payload(hat)))
    print(f"method={cov.method} steps={cov.steps_used} residual={cov.residual:.3e}")

    if args.oracle:
        cov_o, hat_o = _hat_pair(graph, "oracle", tol, max_steps, None)
        dev = float(
            max(np.abs(cov.c - cov_o.c).max(), np.abs(hat.h - hat_o.h).max())
        )
        if args.format == "csv":
            written.append(
                report.write_matrix_csv(args.out / "covariance_oracle.csv", cov_o.c, labels)
            )
            written.append(
                report.write_matrix_csv(args.out / "hat_oracle.csv", hat_o.h, labels)
            )
        else:
            written.append(
                report.write_json(
                    args.out / "covariance_oracle.json", report.matrix_payload(cov_o)
                )
            )
            written.append(
                report.write_json(args.out / "hat_oracle.json", report.matrix_payload(hat_o))
            )
        run["oracle_deviation"] = dev
        print(f"max deviation from oracle: {dev:.3e}")
    written.append(report.write_json(args.out / "run.json", run))
    for path in written:
        print(path)
    return EXIT_OK


def cmd_estimate(args) -> int:
    dataset = _load_dataset(args)
    graph = assemble_graph(dataset)
    method = args.variant or "lazy"
    if method == "centered":
        raise InputDataError("estimate supports simple, lazy and absorbing walks")
    _check_reference(args, method)
    tol = args.tol or SERIES_TOL
    max_steps = _env_cap(estimator.DEFAULT_MAX_STEPS)
    y = dataset.effects()
    trace = estimator.estimate_iterative(graph, y, method, args.steps, args.ref)
    cov = estimator.covariance(graph, method, tol, max_steps, args.ref)
    fitted = (cov.c @ graph.w) @ y
    se = np.sqrt(np.clip(np.diag(cov.c), 0.0, None))

    written = [plots.trajectory_figure(trace, args.out / "trajectory.svg")]
    rows = [
        {
            "study": k[0],
            "treat1": k[1],
            "treat2": k[2],
            "TE": float(y[i]),
            "TE_nma": float(fitted[i]),
            "seTE_nma": float(se[i]),
        }
        for i, k in enumerate(graph.rows)
    ]
    if args.format == "csv":
        written.append(report.write_estimates_csv(args.out / "estimates.csv", rows))
    elif args.format == "json":
        written.append(report.write_json(args.out / "estimates.json", {"rows": rows}))
    if args.ref:
        summary = estimator.nma_summary(graph, y, args.ref, tol, max_steps)
        if args.format == "csv":
            written.append(
                report.write_basic_contrasts_csv(args.out / "contrasts.csv", summary)
            )
        elif args.format == "json":
            written.append(
                report.write_json(
                    args.out / "contrasts.json",
                    {
                        "reference": summary.reference,
                        "contrasts": [
                            {"treatment": t, "TE_nma": e, "seTE_nma": s}
                            for t, e, s in summary.basic
                        ],
                    },
                )
            )
    run = {
        "command": "estimate",
        "method": cov.method,
        "steps": cov.steps_used,
        "residual": cov.residual,
        "q0": trace.q0,
        "q_steps": list(trace.q_steps),
        "fit_step0": [float(v) for v in trace.y_hat_steps[0]],
    }
    written.append(report.write_json(args.out / "run.json", run))
    print(
        f"method={cov.method} trace_steps={trace.n_steps} "
        f"q_final={trace.q_steps[-1]:.3e}"
    )
    for path in written:
        print(path)
    return EXIT_OK


def cmd_walk(args) -> int:
    dataset = _load_dataset(args)
    graph = assemble_graph(dataset)
    variant = args.variant or "simple"
    if variant not in ("simple", "lazy"):
        raise InputDataError("walk supports the simple and lazy variants")
    _check_reference(args, variant)
    board = walkers.bottle_board(graph, args.steps, variant=variant)

    written = []
    if args.format == "csv":
        written.append(report.write_bottles_csv(args.out / "bottles.csv", board))
    elif args.format == "json":
        written.append(
            report.write_json(args.out / "bottles.json", report.bottles_payload(board))
        )
    written.append(plots.bottle_figure(board, args.out / "bottles.svg"))
    for path in written:
        print(path)

    if args.check:
        dd = walkers.diff_of_diffs(board, graph)
        oracle = estimator.covariance_oracle(graph).c
        factor = 2.0 if variant == "lazy" else 1.0
        dev = float(np.abs(dd - factor * oracle).max())
        target = "2 x oracle covariance" if variant == "lazy" else "oracle covariance"
        print(f"max |diff_of_diffs - {target}| = {dev:.3e}")
    return EXIT_OK


def cmd_converge(args) -> int:
    dataset = _load_dataset(args)
    graph = assemble_graph(dataset)
    tol = args.tol or POWER_TOL
    cap = args.steps if args.steps is not None else _env_cap(diffusion.DEFAULT_STEP_CAP)
    if args.variant:
        variants = [args.variant]
    else:
        variants = ["simple", "lazy"] + (["absorbing"] if args.ref else [])
    if "centered" in variants:
        raise InputDataError("converge reports simple, lazy and absorbing walks")

    results = {}
    all_converged = True
    for variant in variants:
        tm = transition(graph, variant, args.ref if variant == "absorbing" else None)
        rep = diffusion.steps_to_converge(tm, _limit_for(tm, graph), tol=tol, cap=cap)
        results[variant] = rep
        all_converged &= rep.converged
        name = variant if variant != "absorbing" else f"absorbing(ref={args.ref})"
        print(f"{name}: {_describe(rep)}")

    payload = {
        "command": "converge",
        "tol": tol,
        "cap": cap,
        "variants": {
            v: {
                "verdict": r.verdict,
                "steps": r.steps,
                "residual": r.residual,
                "limit_gap": r.limit_gap,
            }
            for v, r in results.items()
        },
    }
    path = report.write_json(args.out / "converge.json", payload)
    print(path)
    return EXIT_OK if all_converged else EXIT_NONCONVERGENCE


def cmd_validate(args) -> int:
    dataset = _load_dataset(args)
    graph = assemble_graph(dataset)
    check = is_bipartite(graph)
    studies = dataset.grouped_by_study()
    multi = dataset.multi_arm_studies()
    print(f"treatments: {len(graph.treatments)} ({', '.join(graph.treatments)})")
    print(f"comparisons: {graph.n_comparisons} in {len(studies)} studies")
    print(f"multi-arm studies: {len(multi)}")
    print("connected: yes")
    if check.bipartite:
        groups = [sorted(t for t, c in check.coloring.items() if c == k) for k in (0, 1)]
        print(
            "bipartite: yes "
            f"({{{', '.join(groups[0])}}} vs {{{', '.join(groups[1])}}}); "
            "the simple walk will oscillate, use lazy or absorbing"
        )
    else:
        print(f"bipartite: no (odd cycle {' - '.join(check.odd_cycle)})")
    return EXIT_OK


_COMMANDS = {
    "diffuse": cmd_diffuse,
    "hat": cmd_hat,
    "estimate": cmd_estimate,
    "walk": cmd_walk,
    "converge": cmd_converge,
    "validate": cmd_validate,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.tol is not None and args.tol <= 0:
        print("error: --tol must be positive", file=sys.stderr)
        return EXIT_INPUT
    try:
        return _COMMANDS[args.command](args)
    except InputDataError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except StructuralError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STRUCTURAL
    except NonConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NONCONVERGENCE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
