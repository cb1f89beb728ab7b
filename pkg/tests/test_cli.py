import json
from pathlib import Path

import pytest

from waveop2d.main import EXIT_OK, EXIT_VALIDATION, build_parser, main

ZERO_QUICK = Path(__file__).resolve().parents[1] / "configs" / "zero_quick.toml"


def run_cli(*args) -> int:
    return main([str(arg) for arg in args])


def test_parser_knows_every_subcommand():
    parser = build_parser()
    for name in ("verify", "smatrix", "bound-states", "zero-energy", "wave-op", "levinson",
                 "report"):
        assert parser.parse_args([name, "--config", "x.toml"]).subcommand == name


def test_missing_config_is_a_validation_error(tmp_path):
    assert run_cli("verify", "--config", tmp_path / "missing.toml") == EXIT_VALIDATION


def test_invalid_config_is_a_validation_error(tmp_path):
    path = tmp_path / "bad.json"
    path.write_text(json.dumps({"grid": {"n": 100}}))
    assert run_cli("verify", "--config", path) == EXIT_VALIDATION


def test_free_verify_writes_a_passing_report(tmp_path):
    out = tmp_path / "out"
    assert run_cli("verify", "--config", ZERO_QUICK, "--out", out) == EXIT_OK
    payload = json.loads((out / "verify" / "report.json").read_text())
    assert payload["passed"]
    assert (out / "verify" / "checks.csv").exists()
    assert (out / "verify" / "bound_states.csv").exists()


def test_smatrix_output_is_reproducible(tmp_path):
    out = tmp_path / "out"
    assert run_cli("smatrix", "--config", ZERO_QUICK, "--out", out) == EXIT_OK
    first = (out / "smatrix" / "smatrix.csv").read_bytes()
    assert run_cli("smatrix", "--config", ZERO_QUICK, "--out", out) == EXIT_OK
    assert (out / "smatrix" / "smatrix.csv").read_bytes() == first


def test_report_merges_subcommand_runs(tmp_path):
    out = tmp_path / "out"
    assert run_cli("levinson", "--config", ZERO_QUICK, "--out", out) == EXIT_OK
    assert run_cli("report", "--config", ZERO_QUICK, "--out", out) == EXIT_OK
    merged = json.loads((out / "report" / "report.json").read_text())
    assert {check["name"] for check in merged["checks"]} == {"zero_energy", "bound_states",
                                                             "levinson"}


def test_report_without_runs_fails(tmp_path):
    assert run_cli("report", "--config", ZERO_QUICK, "--out", tmp_path / "empty") != EXIT_OK


def test_version_flag(capsys):
    with pytest.raises(SystemExit):
        build_parser().parse_args(["--version"])
    assert "waveop2d" in capsys.readouterr().out
