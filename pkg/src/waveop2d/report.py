"""
Report assembly and export: JSON reports, CSV tables and pandas views of check results.
"""

import json
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
from loguru import logger

from waveop2d.core.smatrix import FiberOperator
from waveop2d.exceptions import ValidationException
from waveop2d.workbench_types import CheckResult, Verdict, VerificationReport

FLOAT_FORMAT = "%.17g"
S_TABLE_COLUMNS = ["lambda", "m", "m_prime", "re", "im"]


def _jsonable(value: Any) -> Any:
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return _jsonable(value.tolist())
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating,)):
        return _jsonable(float(value))
    if isinstance(value, complex):
        return [value.real, value.imag]
    if isinstance(value, float) and not np.isfinite(value):
        return str(value)
    if isinstance(value, Verdict):
        return value.value
    if isinstance(value, Path):
        return str(value)
    return value


def _atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        Path(tmp).unlink(missing_ok=True)
        raise


class ReportBuilder:
    """Collects check results of one or more runs and writes the report bundle"""

    def __init__(self, output_dir: Path):
        self.output_dir = Path(output_dir)
        self.reports: List[VerificationReport] = []

    def add(self, report: VerificationReport) -> None:
        self.reports.append(report)

    def get_checks_df(self) -> pd.DataFrame:
        """One row per check across all collected reports"""
        rows = [
            {
                "subcommand": report.subcommand,
                "config_hash": report.config_hash,
                "name": check.name,
                "verdict": check.verdict.value,
                "defect": check.defect,
                "threshold": check.threshold,
                "message": check.message,
            }
            for report in self.reports
            for check in report.checks
        ]
        return pd.DataFrame(rows, columns=["subcommand", "config_hash", "name", "verdict",
                                           "defect", "threshold", "message"])

    def write_json(self, report: VerificationReport, name: str = "report.json") -> Path:
        path = self.output_dir / name
        payload = _jsonable(report.to_dict())
        _atomic_write_text(path, json.dumps(payload, indent=2, sort_keys=True) + "\n")
        logger.info(f"Wrote {path}")
        return path

    def write_checks_csv(self, name: str = "checks.csv") -> Path:
        path = self.output_dir / name
        _atomic_write_text(path, self.get_checks_df().to_csv(index=False,
                                                             float_format=FLOAT_FORMAT))
        return path

    def merged(self, config_hash: str) -> VerificationReport:
        """All collected checks in one report, tagged with their subcommand"""
        merged = VerificationReport(config_hash, "report",
                                    version=self.reports[0].version if self.reports else None)
        for report in self.reports:
            for check in report.checks:
                check.evidence.setdefault("subcommand", report.subcommand)
                merged.add(check)
        return merged


def smatrix_table(ops: Sequence[FiberOperator]) -> pd.DataFrame:
    """S(lambda) entries in long form: lambda, m, m_prime, re, im"""
    if not ops:
        return pd.DataFrame(columns=S_TABLE_COLUMNS)
    n = ops[0].n_omega
    m, m_prime = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
    frames = [
        pd.DataFrame({
            "lambda": np.full(n * n, op.energy),
            "m": m.ravel(),
            "m_prime": m_prime.ravel(),
            "re": op.matrix.real.ravel(),
            "im": op.matrix.imag.ravel(),
        })
        for op in ops
    ]
    return pd.concat(frames, ignore_index=True)


def unitarity_table(ops: Sequence[FiberOperator]) -> pd.DataFrame:
    return pd.DataFrame({
        "lambda": [op.energy for op in ops],
        "unitarity_defect": [op.unitarity_defect for op in ops],
    })


def write_csv(df: pd.DataFrame, path: Path) -> Path:
    """Deterministic CSV: fixed column order and round-trip float formatting"""
    _atomic_write_text(Path(path), df.to_csv(index=False, float_format=FLOAT_FORMAT))
    logger.info(f"Wrote {path} ({len(df)} rows)")
    return Path(path)


def load_report(path: Path) -> VerificationReport:
    """Read back a report.json written by ReportBuilder."""
    try:
        data: Dict[str, Any] = json.loads(Path(path).read_text())
        checks = [
            CheckResult.from_string(
                item["verdict"],
                name=item["name"],
                defect=float(item["defect"]),
                threshold=float(item["threshold"]),
                evidence=item.get("evidence", {}),
                message=item.get("message", ""),
            )
            for item in data["checks"]
        ]
    except (OSError, KeyError, ValueError) as e:
        logger.error(f"Error reading report {path}: {e}")
        raise ValidationException(f"Unreadable report {path}: {e}", code="REPORT")
    return VerificationReport(data["config_hash"], data["subcommand"], checks,
                              data.get("version"))


def find_reports(root: Path, exclude: Optional[str] = "report") -> List[Path]:
    """report.json files below root, one per subcommand directory"""
    paths = sorted(Path(root).glob("*/report.json"))
    return [p for p in paths if p.parent.name != exclude]
