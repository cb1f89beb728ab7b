import numpy as np
import pytest

from waveop2d.core.smatrix import FiberOperator
from waveop2d.exceptions import ValidationException
from waveop2d.report import (
    ReportBuilder,
    find_reports,
    load_report,
    smatrix_table,
    unitarity_table,
    write_csv,
)
from waveop2d.workbench_types import CheckResult, Verdict, VerificationReport


@pytest.fixture
def report():
    report = VerificationReport("abc123", "verify", version="0.1.0")
    report.add(CheckResult("levinson", 0.01, 0.05, Verdict.PASS,
                           {"nearest_integer": np.int64(1), "phases": np.array([0.0, -1.0]),
                            "value": 1 + 2j}))
    report.add(CheckResult("smatrix_unitarity", float("inf"), 1e-3, Verdict.FAIL,
                           message="near-singular M0"))
    return report


@pytest.fixture
def ops():
    return [FiberOperator(lam, np.eye(2) * np.exp(1j * lam), 0.0) for lam in (1.0, 2.0)]


def test_json_round_trip(tmp_path, report):
    path = ReportBuilder(tmp_path).write_json(report)
    loaded = load_report(path)
    assert loaded.config_hash == "abc123"
    assert [check.name for check in loaded.checks] == ["levinson", "smatrix_unitarity"]
    levinson = loaded.get("levinson")
    assert levinson.verdict == Verdict.PASS
    assert levinson.evidence["nearest_integer"] == 1
    assert levinson.evidence["phases"] == [0.0, -1.0]
    assert levinson.evidence["value"] == [1.0, 2.0]
    assert loaded.get("smatrix_unitarity").defect == float("inf")
    assert not loaded.passed


def test_unreadable_report(tmp_path):
    path = tmp_path / "report.json"
    path.write_text("{}")
    with pytest.raises(ValidationException) as excinfo:
        load_report(path)
    assert excinfo.value.code == "REPORT"


def test_checks_frame_and_merge(tmp_path, report):
    builder = ReportBuilder(tmp_path)
    builder.add(report)
    builder.add(VerificationReport("abc123", "smatrix",
                                   [CheckResult("m0_high_energy", 0.0, 1.0, Verdict.PASS)]))
    df = builder.get_checks_df()
    assert list(df["name"]) == ["levinson", "smatrix_unitarity", "m0_high_energy"]
    merged = builder.merged("abc123")
    assert merged.subcommand == "report"
    assert merged.get("m0_high_energy").evidence["subcommand"] == "smatrix"


def test_smatrix_table_is_long_form(ops):
    df = smatrix_table(ops)
    assert list(df.columns) == ["lambda", "m", "m_prime", "re", "im"]
    assert len(df) == 8
    first = df[(df["lambda"] == 1.0) & (df["m"] == 0) & (df["m_prime"] == 0)].iloc[0]
    assert first["re"] == pytest.approx(np.cos(1.0))
    assert first["im"] == pytest.approx(np.sin(1.0))
    assert smatrix_table([]).empty


def test_csv_is_deterministic(tmp_path, ops):
    a = write_csv(smatrix_table(ops), tmp_path / "a.csv")
    b = write_csv(smatrix_table(ops), tmp_path / "b.csv")
    assert a.read_bytes() == b.read_bytes()
    assert list(unitarity_table(ops)["unitarity_defect"]) == [0.0, 0.0]


def test_find_reports_skips_the_merged_bundle(tmp_path):
    for name in ("verify", "smatrix", "report"):
        (tmp_path / name).mkdir()
        (tmp_path / name / "report.json").write_text("{}")
    found = find_reports(tmp_path)
    assert [path.parent.name for path in found] == ["smatrix", "verify"]
