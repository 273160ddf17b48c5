from __future__ import annotations

import json

import pytest

import config
from subcash.cli.main import main


def _scenario(fixtures_dir, name="two_state.toml"):
    return ["--scenario", str(fixtures_dir / name)]


def _values(output: str) -> dict[str, str]:
    return dict(line.split(" = ", 1) for line in output.splitlines())


def test_envelope_reserve_prints_closed_form(fixtures_dir, capsys):
    exit_code = main(["reserve", *_scenario(fixtures_dir), "--measure", "base", "--envelope", "band", "--position", "loss_gain"])
    lines = _values(capsys.readouterr().out)

    assert exit_code == 0
    assert lines["command"] == "reserve"
    assert lines["value.reserve"] == "-4.000000000000"
    assert lines["value.worst_discount"] == "[1.000000000000, 0.900000000000]"
    assert lines["meta.construction"] == "envelope"


def test_envelope_reserve_with_grid_oracle(fixtures_dir, capsys):
    exit_code = main(
        ["reserve", *_scenario(fixtures_dir), "--measure", "base", "--envelope", "band", "--position", "loss_gain", "--resolution", "21"]
    )
    lines = _values(capsys.readouterr().out)

    assert exit_code == 0
    assert lines["value.grid_reserve"] == "-4.000000000000"
    assert lines["meta.mesh_bound"] == "0.100000000000"


def test_put_premium_reserve(fixtures_dir, capsys):
    exit_code = main(["reserve", *_scenario(fixtures_dir), "--measure", "base", "--put-rate", "1.05", "--position", "loss_gain"])
    lines = _values(capsys.readouterr().out)

    assert exit_code == 0
    assert lines["value.reserve"] == "4.761904761905"
    assert lines["meta.construction"] == "put"


def test_repeated_runs_are_byte_identical(fixtures_dir, capsys):
    argv = ["dual", *_scenario(fixtures_dir), "--measure", "base", "--envelope", "band", "--position", "loss_gain"]
    main(argv)
    first = capsys.readouterr().out
    main(argv)

    assert capsys.readouterr().out == first


def test_dual_reports_mass_and_zero_gap(fixtures_dir, capsys):
    exit_code = main(["dual", *_scenario(fixtures_dir), "--measure", "base", "--envelope", "band", "--position", "loss_gain"])
    lines = _values(capsys.readouterr().out)

    assert exit_code == 0
    assert lines["value.dual"] == "-4.000000000000"
    assert lines["value.gap"] == "0.000000000000"
    assert lines["value.mass"] == "0.950000000000"
    assert lines["meta.penalty"] == "box"


def test_bridge_reports_both_checks(fixtures_dir, capsys):
    exit_code = main(
        ["bridge", *_scenario(fixtures_dir), "--measure", "base", "--discount", "tilted", "--bond", "calibrated", "--position", "loss_gain"]
    )
    lines = _values(capsys.readouterr().out)

    assert exit_code == 0
    assert lines["check.forward_calibration"] == "PASS"
    assert lines["check.forward_cash_additivity"] == "PASS"
    assert "value.spot_round_trip" in lines


def test_transfer_of_cancelling_exposures(fixtures_dir, capsys):
    exit_code = main(
        [
            "transfer",
            *_scenario(fixtures_dir),
            "--measure-a",
            "base",
            "--envelope-a",
            "band",
            "--exposure-a",
            "short_a",
            "--measure-b",
            "base",
            "--exposure-b",
            "short_b",
        ]
    )
    lines = _values(capsys.readouterr().out)

    assert exit_code == 0
    assert lines["value.residual"] == "0.000000000000"


def test_report_json_written_alongside_stdout(fixtures_dir, capsys, tmp_path):
    target = tmp_path / "report.json"
    main(["reserve", *_scenario(fixtures_dir), "--measure", "base", "--envelope", "band", "--position", "loss_gain", "--report-json", str(target)])
    capsys.readouterr()
    payload = json.loads(target.read_text(encoding="utf-8"))

    assert payload["command"] == "reserve"
    assert payload["values"]["reserve"] == pytest.approx(-4.0)


def test_dynamic_run_writes_node_csv(capsys, tmp_path):
    out = tmp_path / "nodes.csv"
    exit_code = main(
        ["dynamic", "--steps", "4", "--rate-low", "0.01", "--rate-high", "0.10", "--terminal-const", "1", "--dual", "--out", str(out)]
    )
    lines = _values(capsys.readouterr().out)

    assert exit_code == 0
    assert lines["meta.csv_rows"] == "15"
    assert lines["check.dual_control"] == "PASS"
    assert len(out.read_text(encoding="utf-8").splitlines()) == 16


def test_dynamic_subadditivity_suite_runs_without_scenario(capsys):
    exit_code = main(["check", "subadd", "--steps", "10", "--rate-low", "0.0", "--rate-high", "0.05", "--terminal-slope", "2"])

    assert exit_code == 0
    assert "check.dynamic_subadditivity = PASS" in capsys.readouterr().out


def test_failed_check_exits_one(fixtures_dir, capsys):
    exit_code = main(["check", "calibration", *_scenario(fixtures_dir), "--measure", "worst", "--discount", "tilted", "--bond", "calibrated"])

    assert exit_code == config.EXIT_CODES["check_failed"]
    assert "= FAIL" in capsys.readouterr().out


def test_parse_error_exits_two(fixtures_dir, capsys):
    exit_code = main(["reserve", *_scenario(fixtures_dir, "broken.toml"), "--measure", "base", "--position", "x"])
    captured = capsys.readouterr()

    assert exit_code == config.EXIT_CODES["parse"]
    assert captured.out == ""
    assert captured.err.startswith("subcash: error: line ")


def test_missing_scenario_exits_two(tmp_path, capsys):
    exit_code = main(["reserve", "--scenario", str(tmp_path / "absent.toml"), "--measure", "base", "--position", "x"])

    assert exit_code == config.EXIT_CODES["parse"]
    assert "cannot read scenario" in capsys.readouterr().err


def test_unknown_reference_exits_three(fixtures_dir, capsys):
    exit_code = main(["reserve", *_scenario(fixtures_dir), "--measure", "base", "--position", "nope"])

    assert exit_code == config.EXIT_CODES["validation"]
    assert "unknown position 'nope'" in capsys.readouterr().err


def test_invalid_document_exits_three(tmp_path, capsys):
    scenario = tmp_path / "bad.toml"
    scenario.write_text("[atoms]\nprobabilities = [0.5, 0.6]\n", encoding="utf-8")
    exit_code = main(["reserve", "--scenario", str(scenario), "--measure", "base", "--position", "x"])

    assert exit_code == config.EXIT_CODES["validation"]
    assert "line 2:" in capsys.readouterr().err


def test_unbounded_transfer_exits_four(fixtures_dir, capsys):
    exit_code = main(
        ["transfer", *_scenario(fixtures_dir), "--measure-a", "base", "--exposure-a", "loss_gain", "--measure-b", "tilted", "--exposure-b", "zero"]
    )

    assert exit_code == config.EXIT_CODES["numeric"]
    assert capsys.readouterr().out == ""


def test_grid_over_budget_exits_five(fixtures_dir, capsys, monkeypatch):
    monkeypatch.setitem(config.GRID_CONFIG, "max_points", 10)
    exit_code = main(["dual", *_scenario(fixtures_dir), "--measure", "ent", "--position", "loss_gain", "--resolution", "21"])

    assert exit_code == config.EXIT_CODES["capacity"]
    assert "enumeration budget" in capsys.readouterr().err


def test_unwritable_report_json_exits_six(fixtures_dir, capsys, tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("", encoding="utf-8")
    argv = ["reserve", *_scenario(fixtures_dir), "--measure", "base", "--envelope", "band", "--position", "loss_gain"]
    exit_code = main([*argv, "--report-json", str(blocker / "report.json")])
    captured = capsys.readouterr()

    assert exit_code == config.EXIT_CODES["io"]
    assert captured.out == ""
    assert captured.err.startswith("subcash: error: cannot write output: ")


def test_unwritable_node_csv_exits_six(capsys, tmp_path):
    blocker = tmp_path / "blocker"
    blocker.write_text("", encoding="utf-8")
    exit_code = main(["dynamic", "--steps", "4", "--rate-low", "0.01", "--rate-high", "0.10", "--terminal-const", "1", "--out", str(blocker / "nodes.csv")])

    assert exit_code == config.EXIT_CODES["io"]
    assert "cannot write output" in capsys.readouterr().err


def test_dynamic_without_rates_is_a_validation_error(capsys):
    exit_code = main(["dynamic", "--steps", "4"])

    assert exit_code == config.EXIT_CODES["validation"]
    assert "--rate-low" in capsys.readouterr().err


def test_robust_family_envelope_reserve(fixtures_dir, capsys):
    argv = ["reserve", *_scenario(fixtures_dir, "three_state.toml"), "--measure", "family", "--envelope", "staggered", "--position", "book"]
    exit_code = main(argv)
    first = capsys.readouterr().out
    main(argv)

    assert exit_code == 0
    assert _values(first)["value.reserve"] == "1.460000000000"
    assert _values(first)["value.worst_discount"] == "[0.950000000000, 0.900000000000, 0.950000000000]"
    assert capsys.readouterr().out == first


def test_repeated_dynamic_exports_are_byte_identical(capsys, tmp_path):
    argv = ["dynamic", "--steps", "6", "--rate-low", "0.01", "--rate-high", "0.10", "--terminal-slope", "3", "--dual"]
    main([*argv, "--out", str(tmp_path / "first.csv")])
    main([*argv, "--out", str(tmp_path / "second.csv")])
    capsys.readouterr()

    assert (tmp_path / "first.csv").read_bytes() == (tmp_path / "second.csv").read_bytes()


def test_robust_family_composed_with_kinked_discount(fixtures_dir, capsys):
    argv = ["reserve", *_scenario(fixtures_dir, "robust_convex.toml"), "--measure", "family", "--convex", "kinked", "--position", "book"]
    exit_code = main(argv)
    first = capsys.readouterr().out
    main(argv)

    assert exit_code == 0
    assert _values(first)["value.reserve"] == "2.460000000000"
    assert _values(first)["meta.construction"] == "composed"
    assert capsys.readouterr().out == first


def test_convex_bounds_match_envelope_on_robust_family(fixtures_dir, capsys):
    base = ["reserve", *_scenario(fixtures_dir, "robust_convex.toml"), "--measure", "family", "--position", "book"]
    main([*base, "--convex", "staggered"])
    composed = _values(capsys.readouterr().out)
    main([*base, "--envelope", "staggered"])
    envelope = _values(capsys.readouterr().out)

    assert composed["value.reserve"] == envelope["value.reserve"] == "1.460000000000"


def test_kinked_discount_of_a_constant(fixtures_dir, capsys):
    exit_code = main(
        ["reserve", *_scenario(fixtures_dir, "robust_convex.toml"), "--measure", "family", "--convex", "kinked", "--position", "level"]
    )

    assert exit_code == 0
    assert _values(capsys.readouterr().out)["value.reserve"] == "-1.000000000000"
