"""Delimited and JSON output next to the figures.

Matrix payloads follow the fixed schema
{"method": ..., "steps": ..., "residual": ..., "rows": [...], "matrix": [[...]]}.
Floats are written with repr (shortest round-trip form), so identical runs
produce byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .diffusion import DiffusionTrace
from .estimator import EstimationTrace, NmaSummary
from .walkers import BottleBoard

__all__ = [
    "row_key",
    "write_matrix_csv",
    "matrix_payload",
    "write_json",
    "write_trace_csv",
    "trace_payload",
    "write_bottles_csv",
    "bottles_payload",
    "write_estimates_csv",
    "write_summary_csv",
    "write_basic_contrasts_csv",
    "estimation_payload",
]


def _fmt(value) -> str:
    return repr(float(value))


def row_key(key: tuple[str, str, str]) -> str:
    return ":".join(key)


def write_json(path, payload: dict) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
    return path


def _open_csv(path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path.open("w", encoding="utf-8", newline="")


def write_matrix_csv(path, matrix: np.ndarray, labels: list[str]) -> Path:
    path = Path(path)
    with _open_csv(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", *labels])
        for lab, row in zip(labels, np.asarray(matrix)):
            writer.writerow([lab, *map(_fmt, row)])
    return path


def matrix_payload(result) -> dict:
    """Works for CovarianceMatrix and HatMatrix alike."""
    matrix = result.c if hasattr(result, "c") else result.h
    return {
        "method": result.method,
        "steps": int(result.steps_used),
        "residual": float(result.residual),
        "rows": [row_key(k) for k in result.rows],
        "matrix": [[float(v) for v in row] for row in np.asarray(matrix)],
    }


def write_trace_csv(path, trace: DiffusionTrace) -> Path:
    path = Path(path)
    with _open_csv(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(["step", "node", "mass"])
        for k, masses in enumerate(trace.steps):
            for lab, mass in zip(trace.labels, masses):
                writer.writerow([k, lab, _fmt(mass)])
    return path


def trace_payload(trace: DiffusionTrace) -> dict:
    return {
        "variant": trace.variant,
        "nodes": list(trace.labels),
        "steps": [[float(v) for v in step] for step in trace.steps],
    }


def write_bottles_csv(path, board: BottleBoard) -> Path:
    path = Path(path)
    with _open_csv(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(["node", "origin", "remaining"])
        for i, node in enumerate(board.labels):
            for j, origin in enumerate(board.labels):
                writer.writerow([node, origin, _fmt(board.remaining[i, j])])
    return path


def bottles_payload(board: BottleBoard) -> dict:
    return {
        "variant": board.variant,
        "steps": int(board.n_steps),
        "initial_volume": float(board.initial_volume),
        "nodes": list(board.labels),
        "remaining": [[float(v) for v in row] for row in board.remaining],
    }


def write_estimates_csv(path, rows: list[dict]) -> Path:
    """Per-comparison table: observed effect, network estimate, standard error."""
    path = Path(path)
    with _open_csv(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(["study", "treat1", "treat2", "TE", "TE_nma", "seTE_nma"])
        for r in rows:
            writer.writerow(
                [
                    r["study"],
                    r["treat1"],
                    r["treat2"],
                    _fmt(r["TE"]),
                    _fmt(r["TE_nma"]),
                    _fmt(r["seTE_nma"]),
                ]
            )
    return path


def write_summary_csv(path, summary: NmaSummary) -> Path:
    path = Path(path)
    with _open_csv(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(["study", "treat1", "treat2", "TE", "TE_nma", "seTE_nma"])
        for row in summary.rows:
            writer.writerow(
                [
                    row.study_id,
                    row.treat1,
                    row.treat2,
                    _fmt(row.te),
                    _fmt(row.te_nma),
                    _fmt(row.se_nma),
                ]
            )
    return path


def write_basic_contrasts_csv(path, summary: NmaSummary) -> Path:
    path = Path(path)
    with _open_csv(path) as fh:
        writer = csv.writer(fh)
        writer.writerow(["treatment", "reference", "TE_nma", "seTE_nma"])
        for treatment, estimate, se in summary.basic:
            writer.writerow([treatment, summary.reference, _fmt(estimate), _fmt(se)])
    return path


def estimation_payload(trace: EstimationTrace) -> dict:
    return {
        "variant": trace.variant,
        "reference": trace.reference,
        "rows": [row_key(k) for k in trace.rows],
        "q0": float(trace.q0),
        "q_steps": [float(q) for q in trace.q_steps],
        "fits": [[float(v) for v in fit] for fit in trace.y_hat_steps],
    }
