import pytest

from waveop2d.exceptions import SpectralException, ValidationException
from waveop2d.lab import theorem_lab
from waveop2d.lab.base import TheoremCheck
from waveop2d.lab.theorem_lab import CHECKS, TheoremLab
from waveop2d.workbench_types import CheckResult, Verdict

FREE_CHECKS = ["decay_check", "m0_high_energy", "smatrix_unitarity", "smatrix_high_energy",
               "zero_energy", "bound_states", "levinson"]


class ExplodingCheck(TheoremCheck):
    name = "exploding"

    def should_run(self) -> bool:
        return True

    def run(self) -> CheckResult:
        raise SpectralException("boom", code="BOOM")


class DownstreamCheck(TheoremCheck):
    name = "downstream"
    requires = ("exploding",)

    def should_run(self) -> bool:
        return True

    def run(self) -> CheckResult:
        return CheckResult(self.name, 0.0, 1.0, Verdict.PASS)


class IdleCheck(DownstreamCheck):
    name = "idle"
    requires = ()

    def should_run(self) -> bool:
        return False


@pytest.fixture
def patched_checks(monkeypatch):
    for check in (ExplodingCheck, DownstreamCheck, IdleCheck):
        monkeypatch.setitem(theorem_lab.CHECKS, check.name, check)


def test_registry_names_match_check_classes():
    for name, check in CHECKS.items():
        assert check.name == name


def test_schedule_respects_dependencies(zero_config):
    layers = TheoremLab(zero_config).schedule(["levinson", "bound_states", "zero_energy"])
    position = {name: i for i, layer in enumerate(layers) for name in layer}
    assert position["levinson"] > position["bound_states"]
    assert position["levinson"] > position["zero_energy"]


def test_schedule_pulls_in_required_checks(zero_config):
    layers = TheoremLab(zero_config).schedule(["levinson"])
    assert layers[-1] == ["levinson"]
    assert {name for layer in layers[:-1] for name in layer} == {"zero_energy", "bound_states"}


def test_stationary_checks_run_after_the_dilation_audit(zero_config):
    lab = TheoremLab(zero_config)
    assert lab.expand(["wplus_consistency"]) == ["wplus_consistency", "dilation_convention"]
    assert lab.schedule(["wplus_consistency"]) == [["dilation_convention"],
                                                   ["wplus_consistency"]]


def test_missing_dependency_is_rejected(zero_config, monkeypatch):
    class OrphanCheck(DownstreamCheck):
        name = "orphan"
        requires = ("nowhere",)

    monkeypatch.setitem(theorem_lab.CHECKS, "orphan", OrphanCheck)
    with pytest.raises(ValidationException) as excinfo:
        TheoremLab(zero_config).schedule(["orphan"])
    assert excinfo.value.code == "MISSING_DEPENDENCY"



def test_unknown_check_is_rejected(zero_config):
    with pytest.raises(ValidationException) as excinfo:
        TheoremLab(zero_config).schedule(["no_such_check"])
    assert excinfo.value.code == "UNKNOWN_CHECK"


def test_free_run_passes(zero_config, zero_context):
    lab = TheoremLab(zero_config, context=zero_context)
    report = lab.run(FREE_CHECKS)
    assert report.passed
    assert not lab.errors
    assert [check.name for check in report.checks] == FREE_CHECKS
    assert report.get("levinson").evidence["nearest_integer"] == 0
    assert report.get("zero_energy").verdict == Verdict.GENERIC
    assert all(check.evidence["config_hash"] == zero_config.config_hash()
               for check in report.checks)


def test_failing_check_is_reported_and_dependents_skipped(zero_config, zero_context,
                                                          patched_checks):
    lab = TheoremLab(zero_config, context=zero_context)
    report = lab.run(["exploding", "downstream", "idle"])
    assert not report.passed
    assert "exploding" in lab.errors
    assert report.get("exploding").evidence["code"] == "BOOM"
    assert report.get("downstream").verdict == Verdict.FAIL
    assert report.get("idle") is None
    assert set(lab.skipped) == {"downstream", "idle"}
    state = lab.get_current_state()
    assert state["errors"]["exploding"]
    assert state["theta_sign"] == 1
