import csv
import json

import numpy as np

from nma_diffuse import (
    bottle_board,
    covariance_series_lazy,
    diffuse,
    estimate_iterative,
    nma_summary,
    transition,
)
from nma_diffuse.plots import (
    bottle_figure,
    diffusion_frames,
    node_color,
    stacked_trace_figure,
    trajectory_figure,
)
from nma_diffuse.report import (
    bottles_payload,
    estimation_payload,
    matrix_payload,
    row_key,
    trace_payload,
    write_basic_contrasts_csv,
    write_bottles_csv,
    write_estimates_csv,
    write_json,
    write_matrix_csv,
    write_summary_csv,
    write_trace_csv,
)


def test_matrix_payload_schema(toy_graph):
    res = covariance_series_lazy(toy_graph)
    payload = matrix_payload(res)
    assert set(payload) == {"method", "steps", "residual", "rows", "matrix"}
    assert payload["method"] == "series-lazy"
    assert payload["rows"][0] == "s1:A:B"
    assert len(payload["matrix"]) == 7
    assert all(isinstance(v, float) for row in payload["matrix"] for v in row)


def test_matrix_csv_round_trip(tmp_path, toy_graph):
    res = covariance_series_lazy(toy_graph)
    labels = [row_key(k) for k in toy_graph.rows]
    path = write_matrix_csv(tmp_path / "c.csv", res.c, labels)
    with path.open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["row"] + labels
    values = np.array([[float(v) for v in row[1:]] for row in rows[1:]])
    np.testing.assert_array_equal(values, res.c)  # repr round-trips exactly


def test_trace_csv_and_payload(tmp_path, toy_graph):
    tm = transition(toy_graph, "simple")
    trace = diffuse(tm, [1, 0, 0, 0, 0], 2)
    path = write_trace_csv(tmp_path / "trace.csv", trace)
    with path.open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["step", "node", "mass"]
    assert rows[1] == ["0", "A", "1.0"]
    assert rows[7][0:2] == ["1", "B"] and float(rows[7][2]) == 0.5
    payload = trace_payload(trace)
    assert payload["nodes"] == ["A", "B", "C", "D", "E"]
    assert len(payload["steps"]) == 3


def test_bottles_csv_and_payload(tmp_path, toy_graph):
    board = bottle_board(toy_graph, 5)
    path = write_bottles_csv(tmp_path / "b.csv", board)
    with path.open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["node", "origin", "remaining"]
    assert len(rows) == 1 + 25
    payload = bottles_payload(board)
    assert payload["steps"] == 5
    assert payload["initial_volume"] == board.initial_volume


def test_summary_and_estimates_csv(tmp_path, toy_graph, toy):
    summary = nma_summary(toy_graph, toy.effects(), "B")
    spath = write_summary_csv(tmp_path / "s.csv", summary)
    with spath.open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["study", "treat1", "treat2", "TE", "TE_nma", "seTE_nma"]
    assert len(rows) == 8
    cpath = write_basic_contrasts_csv(tmp_path / "contrasts.csv", summary)
    with cpath.open() as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["treatment", "reference", "TE_nma", "seTE_nma"]
    assert [r[0] for r in rows[1:]] == ["A", "C", "D", "E"]
    epath = write_estimates_csv(
        tmp_path / "e.csv",
        [
            {
                "study": "s1",
                "treat1": "A",
                "treat2": "B",
                "TE": 1.0,
                "TE_nma": 0.5,
                "seTE_nma": 0.7,
            }
        ],
    )
    assert epath.read_text().splitlines()[1] == "s1,A,B,1.0,0.5,0.7"


def test_write_json_deterministic(tmp_path):
    payload = {"b": 1, "a": [1.5, 2.25]}
    p1 = write_json(tmp_path / "x.json", payload)
    p2 = write_json(tmp_path / "y.json", payload)
    assert p1.read_bytes() == p2.read_bytes()
    assert json.loads(p1.read_text()) == payload


def test_node_colors_fixed_order_and_cycle():
    assert [node_color(i) for i in range(6)] == [
        "yellow",
        "orange",
        "red",
        "green",
        "violet",
        "blue",
    ]
    assert node_color(6) == "yellow"


def test_figures_written_and_deterministic(tmp_path, toy_graph, toy):
    tm = transition(toy_graph, "simple")
    trace = diffuse(tm, [1, 0, 0, 0, 0], 3)
    frames = diffusion_frames(trace, toy_graph, tmp_path / "frames")
    assert [p.name for p in frames] == [
        "diffusion_step_01.svg",
        "diffusion_step_02.svg",
        "diffusion_step_03.svg",
    ]
    stacked1 = stacked_trace_figure(trace, tmp_path / "stack1.svg")
    stacked2 = stacked_trace_figure(trace, tmp_path / "stack2.svg")
    assert stacked1.read_bytes() == stacked2.read_bytes()
    assert b"<svg" in stacked1.read_bytes()

    est = estimate_iterative(toy_graph, toy.effects(), "lazy", 10)
    t1 = trajectory_figure(est, tmp_path / "traj1.svg")
    t2 = trajectory_figure(est, tmp_path / "traj2.svg")
    assert t1.read_bytes() == t2.read_bytes()

    board = bottle_board(toy_graph, 50)
    b1 = bottle_figure(board, tmp_path / "b1.svg")
    b2 = bottle_figure(board, tmp_path / "b2.svg")
    assert b1.read_bytes() == b2.read_bytes()
    assert b1.stat().st_size > 1000
