"""Report shaping, serialization, and B-table parsing."""

from __future__ import annotations

import json
import math
import warnings

import pytest

from adaptivepool import __version__
from adaptivepool.bench import RunResult
from adaptivepool.controller import DecisionKind
from adaptivepool.reports import (
    COMPARISON_HEADER,
    FORMATS,
    OVERHEAD_HEADER,
    SWEEP_HEADER,
    TRAJECTORY_HEADER,
    BTableParseError,
    build_manifest,
    build_sweep_report,
    comparison_rows,
    overhead_rows,
    parse_b_table,
    render_csv,
    render_json,
    sweep_beta_table,
    trajectory_rows,
    write_report,
)
from adaptivepool.simulator import TrajectoryStep


def _result(tps: float, lats=None, beta: float = 0.5, veto: int = 0) -> RunResult:
    return RunResult(
        tps=tps,
        latencies_ms=list(lats) if lats is not None else [10.0, 12.0, 15.0],
        mean_beta=beta,
        duration_s=10.0,
        completed=int(tps * 10),
        final_n=8,
        veto_count=veto,
    )


# -- manifest ---------------------------------------------------------


def test_manifest_captures_invocation_and_host():
    m = build_manifest("sweep", {"threads": [1, 8], "runs": 5})
    assert m.subcommand == "sweep"
    assert m.parameters == {"threads": [1, 8], "runs": 5}
    assert m.version == __version__
    assert set(m.host) == {"cpu_count", "platform", "affinity"}
    assert m.host["affinity"] == "not-requested"
    assert m.host["cpu_count"] >= 1


def test_manifest_copies_parameters():
    params = {"runs": 3}
    m = build_manifest("sweep", params)
    params["runs"] = 99
    assert m.parameters["runs"] == 3


def test_manifest_records_requested_affinity():
    m = build_manifest("sweep", {}, affinity="applied:1")
    assert m.host["affinity"] == "applied:1"


# -- csv rendering ------------------------------------------------------


def test_csv_header_and_rows():
    text = render_csv(("a", "b"), [(1, 2.5), (3, None)])
    assert text == "a,b\n1,2.5\n3,\n"


def test_csv_floats_round_trip_exactly():
    # repr() cells so a parse gives back the same double
    value = 1.0 / 3.0
    text = render_csv(("x",), [(value,)])
    assert float(text.splitlines()[1]) == value


def test_csv_quotes_cells_containing_commas():
    text = render_csv(("label",), [("a,b",)])
    assert text.splitlines()[1] == '"a,b"'


def test_csv_none_is_empty_cell():
    line = render_csv(("a", "b", "c"), [(None, 1, None)]).splitlines()[1]
    assert line == ",1,"


def test_csv_uses_bare_newlines():
    assert "\r" not in render_csv(("a",), [(1,), (2,)])


# -- json rendering ------------------------------------------------------


def test_json_embeds_manifest_and_rows():
    m = build_manifest("overhead", {"ops": 100})
    doc = json.loads(render_json(m, ("x", "y"), [(1, 2.0), (3, 4.0)]))
    assert doc["manifest"]["subcommand"] == "overhead"
    assert doc["manifest"]["parameters"] == {"ops": 100}
    assert doc["manifest"]["version"] == __version__
    assert doc["rows"] == [{"x": 1, "y": 2.0}, {"x": 3, "y": 4.0}]


def test_json_nan_becomes_null():
    m = build_manifest("sweep", {})
    doc = json.loads(render_json(m, ("v",), [(float("nan"),)]))
    assert doc["rows"][0]["v"] is None


def test_json_is_strict():
    # json.loads with default settings rejects NaN literals, so a
    # successful strict parse is the real assertion here
    m = build_manifest("sweep", {})
    text = render_json(m, ("v",), [(float("nan"), )])
    json.loads(text, parse_constant=lambda s: pytest.fail(f"non-strict token {s}"))


def test_json_extra_keys_land_at_top_level():
    m = build_manifest("sweep", {})
    doc = json.loads(render_json(m, ("v",), [(1,)], extra={"peak_n": 8}))
    assert doc["peak_n"] == 8


def test_json_ends_with_newline():
    m = build_manifest("sweep", {})
    assert render_json(m, ("v",), [(1,)]).endswith("}\n")


def test_json_key_order_is_deterministic():
    m = build_manifest("sweep", {"b": 1, "a": 2})
    assert render_json(m, ("v",), [(1,)]) == render_json(m, ("v",), [(1,)])


# -- write_report ---------------------------------------------------------


def test_write_report_rejects_unknown_format(tmp_path):
    m = build_manifest("sweep", {})
    with pytest.raises(ValueError, match="format"):
        write_report(m, ("a",), [(1,)], "xml", str(tmp_path / "r.xml"))


def test_write_report_stdout_when_no_path(capsys):
    m = build_manifest("sweep", {})
    write_report(m, ("a",), [(1,)], "csv", None)
    assert capsys.readouterr().out == "a\n1\n"


def test_write_report_json_file(tmp_path):
    m = build_manifest("sweep", {"runs": 2})
    out = tmp_path / "r.json"
    write_report(m, ("a",), [(1,)], "json", str(out), extra={"peak_n": 4})
    doc = json.loads(out.read_text())
    assert doc["rows"] == [{"a": 1}]
    assert doc["peak_n"] == 4
    assert not (tmp_path / "r.json.manifest.json").exists()


def test_write_report_csv_file_gets_manifest_sidecar(tmp_path):
    m = build_manifest("sweep", {"runs": 2})
    out = tmp_path / "r.csv"
    write_report(m, ("a",), [(1,)], "csv", str(out), extra={"peak_n": 4})
    assert out.read_text() == "a\n1\n"
    sidecar = json.loads((tmp_path / "r.csv.manifest.json").read_text())
    assert sidecar["manifest"]["parameters"] == {"runs": 2}
    assert sidecar["peak_n"] == 4


def test_formats_tuple_is_the_supported_set():
    assert FORMATS == ("csv", "json")


# -- sweep report -----------------------------------------------------------


def test_sweep_report_row_shape_and_order():
    results = {
        8: [_result(100.0), _result(110.0)],
        1: [_result(40.0), _result(42.0)],
    }
    report = build_sweep_report(results)
    assert [row[0] for row in report.rows] == [1, 8]
    assert all(len(row) == len(SWEEP_HEADER) for row in report.rows)
    assert report.rows[0][1] == 2  # runs folded per N


def test_sweep_report_peak_and_degradation():
    results = {
        1: [_result(50.0), _result(50.0)],
        8: [_result(100.0), _result(100.0)],
        64: [_result(80.0), _result(60.0)],
    }
    report = build_sweep_report(results)
    assert report.peak_n == 8
    assert report.peak_tps == 100.0
    # largest swept count averaged 70 against a 100 peak
    assert report.degradation == pytest.approx(0.30)


def test_sweep_report_peak_at_largest_means_no_degradation():
    results = {
        1: [_result(10.0)] * 2,
        4: [_result(90.0)] * 2,
    }
    report = build_sweep_report(results)
    assert report.peak_n == 4
    assert report.degradation == 0.0


def test_sweep_report_single_point_degrades_zero():
    report = build_sweep_report({8: [_result(100.0), _result(102.0)]})
    assert report.peak_n == 8
    assert report.degradation == 0.0


def test_sweep_report_mean_beta_averages_runs():
    results = {4: [_result(50.0, beta=0.2), _result(50.0, beta=0.4)]}
    report = build_sweep_report(results)
    assert report.rows[0][SWEEP_HEADER.index("mean_beta")] == pytest.approx(0.3)


def test_sweep_report_all_nan_beta_is_missing():
    nan = float("nan")
    results = {4: [_result(50.0, beta=nan), _result(50.0, beta=nan)]}
    report = build_sweep_report(results)
    assert report.rows[0][SWEEP_HEADER.index("mean_beta")] is None


def test_sweep_report_zero_vetoes_is_missing():
    # static arms have no controller; an all-zero veto column would
    # suggest one voted and never objected
    report = build_sweep_report({4: [_result(50.0), _result(51.0)]})
    assert report.rows[0][SWEEP_HEADER.index("veto_count")] is None


def test_sweep_report_vetoes_sum_across_runs():
    report = build_sweep_report(
        {4: [_result(50.0, veto=2), _result(51.0, veto=3)]}
    )
    assert report.rows[0][SWEEP_HEADER.index("veto_count")] == 5


def test_sweep_report_single_run_spread_is_nan():
    report = build_sweep_report({4: [_result(50.0)]})
    row = report.rows[0]
    assert math.isnan(row[SWEEP_HEADER.index("tps_stddev")])
    assert math.isnan(row[SWEEP_HEADER.index("tps_ci95")])
    assert row[SWEEP_HEADER.index("tps_mean")] == 50.0


def test_sweep_beta_table_maps_n_to_beta():
    results = {
        1: [_result(50.0, beta=0.1)],
        8: [_result(90.0, beta=0.6)],
    }
    table = sweep_beta_table(build_sweep_report(results))
    assert table == {1: pytest.approx(0.1), 8: pytest.approx(0.6)}


def test_sweep_beta_table_skips_missing_betas():
    results = {
        1: [_result(50.0, beta=float("nan"))],
        8: [_result(90.0, beta=0.6)],
    }
    table = sweep_beta_table(build_sweep_report(results))
    assert set(table) == {8}


# -- comparison rows ----------------------------------------------------------


def test_comparison_rows_shape():
    rows = comparison_rows([
        ("static-peak", 8, _result(100.0), 1.0),
        ("adaptive", "4..256", _result(96.0, veto=3), 0.96),
    ])
    assert all(len(r) == len(COMPARISON_HEADER) for r in rows)
    assert rows[0][0] == "static-peak"
    assert rows[1][COMPARISON_HEADER.index("veto_count")] == 3
    assert rows[1][COMPARISON_HEADER.index("eta")] == 0.96


def test_comparison_rows_p99_from_latencies():
    # nearest-rank: ceil(0.99 * 200) = 198th order statistic
    lats = [float(i) for i in range(1, 201)]
    rows = comparison_rows([("arm", 4, _result(10.0, lats=lats), None)])
    assert rows[0][COMPARISON_HEADER.index("pooled_p99_ms")] == 198.0


def test_comparison_rows_empty_latencies_give_missing_p99():
    rows = comparison_rows([("arm", 4, _result(10.0, lats=[]), None)])
    assert rows[0][COMPARISON_HEADER.index("pooled_p99_ms")] is None


def test_comparison_rows_nan_beta_becomes_missing():
    rows = comparison_rows([("arm", 4, _result(10.0, beta=float("nan")), None)])
    assert rows[0][COMPARISON_HEADER.index("mean_beta")] is None


def test_comparison_rows_small_samples_do_not_warn():
    # the small-sample advisory belongs to the stats layer, not reports
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        comparison_rows([("arm", 4, _result(10.0, lats=[5.0, 6.0]), None)])


# -- trajectory / overhead rows ------------------------------------------------


def test_trajectory_rows_use_decision_labels():
    steps = [
        TrajectoryStep(1, 4, 0.9, DecisionKind.SCALE_UP),
        TrajectoryStep(2, 5, 0.2, DecisionKind.VETO),
    ]
    rows = trajectory_rows(steps)
    assert rows == [(1, 4, 0.9, "ScaleUp"), (2, 5, 0.2, "Veto")]
    assert len(rows[0]) == len(TRAJECTORY_HEADER)


def test_overhead_rows_follow_header_order():
    report = {
        "ops": 1000.0,
        "baseline_us": 0.1,
        "mean_us": 0.5,
        "median_us": 0.4,
        "p99_us": 1.2,
        "fraction_of_10ms": 0.00004,
    }
    (row,) = overhead_rows(report)
    assert row == tuple(report[k] for k in OVERHEAD_HEADER)


# -- b-table parsing --------------------------------------------------------


def _write(tmp_path, text: str) -> str:
    p = tmp_path / "b.csv"
    p.write_text(text)
    return str(p)


def test_parse_b_table_round_trips_a_rendered_table(tmp_path):
    header = ("n", "beta")
    rows = [(1, 0.8), (2, 0.7), (3, 1.0 / 3.0)]
    path = _write(tmp_path, render_csv(header, rows))
    assert parse_b_table(path) == dict(rows)


def test_parse_b_table_header_is_case_and_space_insensitive(tmp_path):
    path = _write(tmp_path, " N , Beta \n1,0.5\n")
    assert parse_b_table(path) == {1: 0.5}


def test_parse_b_table_skips_blank_lines(tmp_path):
    path = _write(tmp_path, "n,beta\n1,0.5\n\n2,0.4\n")
    assert parse_b_table(path) == {1: 0.5, 2: 0.4}


@pytest.mark.parametrize(
    "text,line,phrase",
    [
        ("", 1, "empty file"),
        ("threads,beta\n1,0.5\n", 1, "header"),
        ("n,beta\n", 2, "no data rows"),
        ("n,beta\n1,0.5,9\n", 2, "2 fields"),
        ("n,beta\n1.5,0.5\n", 2, "thread count"),
        ("n,beta\n1,fast\n", 2, "bad beta"),
        ("n,beta\n1,1.5\n", 2, "outside"),
        ("n,beta\n1,-0.1\n", 2, "outside"),
        ("n,beta\n1,0.5\n1,0.6\n", 3, "duplicate"),
    ],
)
def test_parse_b_table_rejects_malformed_input(tmp_path, text, line, phrase):
    path = _write(tmp_path, text)
    with pytest.raises(BTableParseError) as exc:
        parse_b_table(path)
    assert exc.value.line == line
    assert phrase in str(exc.value)
    assert f"{path}:{line}" in str(exc.value)


def test_parse_b_table_error_is_a_value_error(tmp_path):
    # callers that map ValueError to a usage exit catch this too
    path = _write(tmp_path, "bogus\n")
    with pytest.raises(ValueError):
        parse_b_table(path)
