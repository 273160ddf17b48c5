from __future__ import annotations

import json
import math

import numpy as np
import pandas as pd
import pytest

from subcash.evaluation.checks import CheckReport, CheckStatus, combine_reports
from subcash.evaluation.reports import RunReport, format_number, inputs_digest, write_json, write_node_csv, write_run_report


@pytest.mark.parametrize(
    ("value", "expected"),
    [
        (-4.0, "-4.000000000000"),
        (0.5 * 10.0 / 1.05, "4.761904761905"),
        (-0.0, "0.000000000000"),
        (-1e-15, "0.000000000000"),
        (math.inf, "inf"),
        (-math.inf, "-inf"),
    ],
)
def test_format_number(value, expected):
    assert format_number(value) == expected


def test_render_lists_values_metadata_and_checks():
    report = RunReport(
        "check subadd",
        "abc",
        {"reserve": -4.0, "maximizer": np.array([0.5, 0.45])},
        {"steps": 4, "construction": "envelope", "unique": False},
        (
            CheckReport("cash_subadditivity", CheckStatus.FAILED, {}, 2.5),
            CheckReport.skipped("comparison", "precondition failed: terminal 1 < terminal 2"),
        ),
    )

    assert report.render().splitlines() == [
        "command = check subadd",
        "digest = abc",
        "value.reserve = -4.000000000000",
        "value.maximizer = [0.500000000000, 0.450000000000]",
        "meta.steps = 4",
        "meta.construction = envelope",
        "meta.unique = false",
        "check.cash_subadditivity = FAIL",
        "check.cash_subadditivity.witness = 2.500000000000",
        "check.comparison = SKIPPED",
        "check.comparison.reason = precondition failed: terminal 1 < terminal 2",
    ]
    assert not report.all_passed


def test_write_json_is_sorted_and_nulls_non_finite(tmp_path):
    path = write_json({"b": math.inf, "a": np.float64(1.5), "c": (1, np.nan)}, tmp_path / "nested" / "out.json")
    text = path.read_text(encoding="utf-8")

    assert text.endswith("}\n")
    assert list(json.loads(text)) == ["a", "b", "c"]
    assert json.loads(text) == {"a": 1.5, "b": None, "c": [1, None]}


def test_write_run_report_uses_command_name(tmp_path):
    report = RunReport("check calibration", "d", {}, {}, (CheckReport("calibration", CheckStatus.PASSED, {"max_gap": 0.0}),))
    path = write_run_report(report, tmp_path)

    assert path.name == "check.json"
    assert json.loads(path.read_text(encoding="utf-8"))["checks"][0]["status"] == "PASS"


def test_inputs_digest_is_order_independent():
    first = inputs_digest(b"[atoms]", {"measure": "base", "position": "x"})
    second = inputs_digest(b"[atoms]", {"position": "x", "measure": "base"})

    assert first == second
    assert len(first) == 64
    assert inputs_digest(b"[atoms]", {"measure": "ent", "position": "x"}) != first
    assert inputs_digest(None, {}) == inputs_digest(b"", {})


def test_write_node_csv_leaves_undefined_cells_empty(tmp_path):
    frame = pd.DataFrame({"t": [0, 1], "Y": [-1.25, 0.5], "beta_bar": [0.01, np.nan]})
    path = write_node_csv(frame, tmp_path / "nodes.csv")
    raw = path.read_bytes()

    assert b"\r\n" not in raw
    assert raw.decode("utf-8").splitlines() == ["t,Y,beta_bar", "0,-1.250000000000,0.010000000000", "1,0.500000000000,"]


def test_combine_reports_prefers_failure_then_skip():
    passed = CheckReport("a", CheckStatus.PASSED)
    failed = CheckReport("b", CheckStatus.FAILED, {}, 1.0)
    skipped = CheckReport.skipped("c", "precondition failed")

    assert combine_reports("all", [passed, skipped, failed]).witness == 1.0
    assert combine_reports("all", [passed, skipped]).status is CheckStatus.SKIPPED
    assert combine_reports("all", [passed]).details == {"a": "PASS"}
