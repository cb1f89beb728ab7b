from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Optional


class Verdict(str, Enum):
    PASS = "PASS"
    WARN = "WARN"
    FAIL = "FAIL"
    GENERIC = "GENERIC"
    RESONANT_SUSPECT = "RESONANT-SUSPECT"
    COMPACT_CONSISTENT = "COMPACT-CONSISTENT"
    NOT_CONSISTENT = "NOT-CONSISTENT"

    @property
    def ok(self) -> bool:
        """Whether the verdict counts as a passed check"""
        return self in (Verdict.PASS, Verdict.WARN, Verdict.GENERIC, Verdict.COMPACT_CONSISTENT)


@dataclass
class CheckResult:
    """Outcome of one numerical check, always with its evidence"""
    name: str
    defect: float
    threshold: float
    verdict: Verdict
    evidence: Dict[str, Any] = field(default_factory=dict)
    message: str = ""

    def __str__(self) -> str:
        return (
            f"CheckResult({self.name}: {self.verdict.value} "
            f"defect={self.defect:.3e} threshold={self.threshold:.3e})"
        )

    @classmethod
    def from_string(cls, verdict: str, **kwargs) -> "CheckResult":
        """Create CheckResult with string verdict value"""
        return cls(verdict=Verdict(verdict.upper()), **kwargs)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "name": self.name,
            "defect": self.defect,
            "threshold": self.threshold,
            "verdict": self.verdict.value,
            "message": self.message,
            "evidence": self.evidence,
        }


@dataclass
class VerificationReport:
    """Checks emitted by one run, stamped with the config provenance"""
    config_hash: str
    subcommand: str
    checks: List[CheckResult] = field(default_factory=list)
    version: Optional[str] = None

    @property
    def passed(self) -> bool:
        """True when every check carries an ok verdict"""
        return all(check.verdict.ok for check in self.checks)

    def add(self, check: CheckResult) -> None:
        self.checks.append(check)

    def get(self, name: str) -> Optional[CheckResult]:
        for check in self.checks:
            if check.name == name:
                return check
        return None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "config_hash": self.config_hash,
            "subcommand": self.subcommand,
            "version": self.version,
            "passed": self.passed,
            "checks": [check.to_dict() for check in self.checks],
        }

    def __str__(self) -> str:
        n_ok = sum(1 for check in self.checks if check.verdict.ok)
        return (
            f"VerificationReport({self.subcommand}, "
            f"{n_ok}/{len(self.checks)} ok, config={self.config_hash[:12]})"
        )
