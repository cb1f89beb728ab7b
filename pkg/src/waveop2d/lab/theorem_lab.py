"""
Theorem lab: runs the numerical checks over one scattering context and assembles the report.
"""

from typing import Dict, List, Optional, Sequence, Type

import numpy as np
from loguru import logger

from waveop2d.concurrency import parallel_map
from waveop2d.config import RunConfig
from waveop2d.core.birman_schwinger import high_energy_check, zero_energy_diagnostic
from waveop2d.core.dilation import (
    audit_dilation_convention,
    constant_symbol,
    make_polar_grid,
)
from waveop2d.core.free_ops import lemma_diagnostics, make_energy_grid
from waveop2d.core.grid import Field2D, WavePacketSpec, make_packet
from waveop2d.core.potential import decay_check
from waveop2d.core.propagation import intertwining_probe, wave_operator_time
from waveop2d.core.smatrix import (
    born_limit_check,
    det_phase_curve,
    smatrix_high_energy,
    unitarity_check,
)
from waveop2d.exceptions import ValidationException, WorkbenchException
from waveop2d.lab.base import ScatteringContext, TheoremCheck
from waveop2d.lab.bound_states import bound_state_check, bound_states, radial_shooting_oracle
from waveop2d.lab.compactness import (
    commutator_compactness_probe,
    commutator_family,
    free_flight_family,
    remainder_probe,
    translated_family,
)
from waveop2d.lab.levinson import levinson_check
from waveop2d.lab.wave_operators import wave_operator_crosscheck, wplus_consistency
from waveop2d.workbench_types import CheckResult, Verdict, VerificationReport


def packet_from_spec(ctx: ScatteringContext, spec) -> Field2D:
    return make_packet(ctx.grid, WavePacketSpec(center=tuple(spec.center),
                                                momentum=tuple(spec.momentum), width=spec.width))


class DecayCheck(TheoremCheck):
    name = "decay_check"

    def should_run(self) -> bool:
        return True

    def run(self) -> CheckResult:
        return decay_check(self.context.potential, self.context.grid)


class LemmaCheck(TheoremCheck):
    name = "lemma_diagnostics"

    def should_run(self) -> bool:
        return True

    def run(self) -> CheckResult:
        ctx, verify = self.context, self.config.verify
        return lemma_diagnostics(ctx.grid, ctx.quad, ctx.egrid, verify.lemma_weight, ctx.n_omega,
                                 low_energy_tolerance=verify.lemma_low_energy_tolerance)


class M0HighEnergyCheck(TheoremCheck):
    name = "m0_high_energy"

    def should_run(self) -> bool:
        return True

    def run(self) -> CheckResult:
        ctx = self.context
        return high_energy_check(ctx.quad, ctx.egrid, ctx.threads)


class UnitarityCheck(TheoremCheck):
    name = "smatrix_unitarity"

    def should_run(self) -> bool:
        return True

    def run(self) -> CheckResult:
        return unitarity_check(self.context.s_curve, self.config.verify.tol_unit)


class SMatrixHighEnergyCheck(TheoremCheck):
    name = "smatrix_high_energy"

    def should_run(self) -> bool:
        return True

    def run(self) -> CheckResult:
        return smatrix_high_energy(self.context.s_curve)


class BornLimitCheck(TheoremCheck):
    name = "born_limit"

    def should_run(self) -> bool:
        return self.context.potential.shape_transform is not None

    def run(self) -> CheckResult:
        ctx, verify = self.context, self.config.verify
        return born_limit_check(ctx.potential, ctx.grid, verify.born_energies,
                                verify.born_couplings, ctx.n_omega, verify.born_v_cut,
                                self.config.potential.cap)


class ZeroEnergyCheck(TheoremCheck):
    name = "zero_energy"

    def should_run(self) -> bool:
        return True

    def run(self) -> CheckResult:
        verify = self.config.verify
        return zero_energy_diagnostic(self.context.quad, verify.zero_energy_ladder,
                                      verify.resonance_tol, verify.resonance_drop,
                                      threads=self.context.threads)


class DilationConventionCheck(TheoremCheck):
    """Fixes the sign of theta(A+) for every downstream stationary check"""
    name = "dilation_convention"

    def should_run(self) -> bool:
        return self.context.egrid.spacing == "log"

    def run(self) -> CheckResult:
        ctx, dilation = self.context, self.config.dilation
        probe = packet_from_spec(ctx, self.config.verify.probe)
        polar = make_polar_grid(ctx.grid, dilation.n_theta, dilation.n_sigma)
        sign, defect = audit_dilation_convention(probe, ctx.egrid, ctx.n_omega,
                                                 dilation.audit_tolerance, polar)
        ctx.theta_sign = sign
        return CheckResult(
            name=self.name,
            defect=defect,
            threshold=dilation.audit_tolerance,
            verdict=Verdict.PASS,
            evidence={"theta_sign": sign, "n_theta": polar.n_theta, "n_sigma": polar.n_sigma},
        )


class StationaryCheck(TheoremCheck):
    """Checks that apply theta(A+) and therefore wait for the convention audit"""
    requires = ("dilation_convention",)

    def should_run(self) -> bool:
        return self.context.egrid.spacing == "log"


class CrossCheck(StationaryCheck):
    name = "wave_operator_crosscheck"

    def run(self) -> CheckResult:
        ctx, prop = self.context, self.config.propagation
        pairs = [(packet_from_spec(ctx, f), packet_from_spec(ctx, g))
                 for f, g in self.config.verify.pairs]
        return wave_operator_crosscheck(pairs, ctx, prop.t_ladder, prop.dt, prop.tol_w,
                                        self.config.verify.crosscheck_tolerance)


class RemainderCompactnessCheck(StationaryCheck):
    name = "remainder_compactness"

    def should_run(self) -> bool:
        return super().should_run() and not self.context.quad.is_empty

    def run(self) -> CheckResult:
        ctx, family_spec = self.context, self.config.verify.family
        if family_spec.kind == "free_flight":
            fine = make_energy_grid(family_spec.fine_count, family_spec.fine_lambda_max,
                                    family_spec.fine_lambda_min)
            family = free_flight_family(ctx, fine, family_spec.times, family_spec.momentum,
                                        family_spec.width)
        else:
            family = translated_family(ctx, family_spec.radii, momentum=family_spec.momentum,
                                       width=family_spec.width)
        verify = self.config.verify
        return remainder_probe(ctx, family, verify.decay_factor, verify.control_spread)


class CommutatorCompactnessCheck(StationaryCheck):
    name = "commutator_compactness"

    def should_run(self) -> bool:
        return super().should_run() and not self.context.quad.is_empty

    def run(self) -> List[CheckResult]:
        ctx, verify = self.context, self.config.verify
        spec = verify.family
        fine = make_energy_grid(spec.fine_count, spec.fine_lambda_max, spec.fine_lambda_min)
        family = commutator_family(ctx.quad, fine, spec.commutator_times,
                                   spec.commutator_center, spec.commutator_spread)
        calculus = ctx.calculus_on(fine)
        probe = commutator_compactness_probe(family, ctx.quad, calculus, ctx.theta(),
                                             ctx.n_omega, verify.decay_factor,
                                             verify.control_spread)
        probe.evidence["symbol"] = probe.name
        probe.name = self.name
        control = commutator_compactness_probe(family, ctx.quad, calculus, constant_symbol(1.0),
                                               ctx.n_omega, verify.decay_factor,
                                               verify.control_spread)
        worst = max(control.evidence["norms"])
        constant = CheckResult(
            name="commutator_constant_control",
            defect=worst,
            threshold=0.0,
            verdict=Verdict.PASS if worst == 0.0 else Verdict.FAIL,
            evidence={"norms": control.evidence["norms"]},
        )
        return [probe, constant]


class WPlusCheck(StationaryCheck):
    name = "wplus_consistency"

    def run(self) -> CheckResult:
        ctx, verify, prop = self.context, self.config.verify, self.config.propagation
        if not verify.pairs:
            return wplus_consistency(packet_from_spec(ctx, verify.probe), ctx,
                                     verify.wplus_tolerance)
        f, g = (packet_from_spec(ctx, spec) for spec in verify.pairs[0])
        return wplus_consistency(f, ctx, verify.wplus_tolerance, g, prop.t_ladder, prop.dt,
                                 prop.tol_w, verify.crosscheck_tolerance)


class IntertwiningCheck(TheoremCheck):
    name = "intertwining_probe"

    def should_run(self) -> bool:
        return True

    def run(self) -> CheckResult:
        ctx, prop = self.context, self.config.propagation
        probe = packet_from_spec(ctx, self.config.verify.probe)
        return intertwining_probe(probe, prop.tau, prop.t_ladder, prop.dt, ctx.v_field,
                                  prop.tol_w)


class WaveOperatorConvergenceCheck(TheoremCheck):
    """Cauchy ladders of both time-domain wave operators on the probe packet"""
    name = "wave_operator_convergence"

    def should_run(self) -> bool:
        return True

    def run(self) -> CheckResult:
        ctx, prop = self.context, self.config.propagation
        probe = packet_from_spec(ctx, self.config.verify.probe)
        records = {}
        for sign in ("-", "+"):
            _, record = wave_operator_time(probe, sign, prop.t_ladder, prop.dt, ctx.v_field,
                                           prop.tol_w, prop.energy_cut, strict=False)
            records[sign] = record
        worst = max(record.increments[-1] for record in records.values())
        converged = all(record.converged for record in records.values())
        return CheckResult(
            name=self.name,
            defect=worst,
            threshold=prop.tol_w,
            verdict=Verdict.PASS if converged else Verdict.FAIL,
            evidence={f"W{sign}": record.to_dict() for sign, record in records.items()},
        )


class BoundStateCheck(TheoremCheck):
    name = "bound_states"

    def should_run(self) -> bool:
        return True

    def run(self) -> CheckResult:
        ctx, verify = self.context, self.config.verify
        lattice = bound_states(ctx.v_field, verify.k_max)
        oracle = None
        if ctx.potential.is_radial:
            oracle = radial_shooting_oracle(ctx.potential, verify.ell_max)
        return bound_state_check(lattice, oracle, verify.bound_state_tolerance)


class LevinsonCheck(TheoremCheck):
    name = "levinson"
    requires = ("zero_energy", "bound_states")

    def should_run(self) -> bool:
        return True

    def run(self) -> CheckResult:
        ctx, verify = self.context, self.config.verify
        count = self.upstream_evidence("bound_states", "oracle_count")
        if count is None:
            count = self.upstream_evidence("bound_states", "lattice_count")
        if count is None:
            count = bound_states(ctx.v_field, verify.k_max).count
        zero = self.upstream.get("zero_energy")
        zero_verdict = zero[0].verdict if zero else Verdict.GENERIC
        phases = det_phase_curve(ctx.s_curve, verify.tol_unit)
        result = levinson_check(ctx.egrid, phases, int(count), ctx.potential_integral,
                                zero_verdict, verify.levinson_rungs, verify.levinson_tolerance)
        result.evidence["phase_curve"] = {"energies": ctx.egrid.energies.tolist(),
                                          "phases": np.asarray(phases).tolist()}
        return result


CHECKS: Dict[str, Type[TheoremCheck]] = {
    check.name: check
    for check in (
        DecayCheck,
        LemmaCheck,
        M0HighEnergyCheck,
        UnitarityCheck,
        SMatrixHighEnergyCheck,
        BornLimitCheck,
        ZeroEnergyCheck,
        DilationConventionCheck,
        CrossCheck,
        IntertwiningCheck,
        WaveOperatorConvergenceCheck,
        RemainderCompactnessCheck,
        CommutatorCompactnessCheck,
        WPlusCheck,
        BoundStateCheck,
        LevinsonCheck,
    )
}

# checks that read the S(lambda) curve or the M0 inverses
NEEDS_INVERSES = {"smatrix_unitarity", "smatrix_high_energy", "wave_operator_crosscheck",
                  "remainder_compactness", "wplus_consistency", "levinson"}


class TheoremLab:
    """Coordinates the checks of one run over a shared scattering context."""

    def __init__(
        self,
        config: RunConfig,
        context: Optional[ScatteringContext] = None,
        subcommand: str = "verify",
        version: Optional[str] = None,
        concurrent_checks: int = 1,
    ):
        self.config = config
        self.context = context
        self.subcommand = subcommand
        self.version = version
        self.concurrent_checks = concurrent_checks
        self.results: Dict[str, List[CheckResult]] = {}
        self.errors: Dict[str, WorkbenchException] = {}
        self.skipped: List[str] = []

    def run(self, names: Optional[Sequence[str]] = None) -> VerificationReport:
        """Run the named checks (all configured ones by default) in dependency order."""
        names = self.expand(names if names is not None else self.config.verify.checks)
        try:
            logger.info(f"Theorem lab starting {self.subcommand}: {', '.join(names)}")
            self._setup(names)
            for layer in self.schedule(names):
                checks = [self._instantiate(name) for name in layer]
                outcomes = parallel_map(self._run_check, checks, self.concurrent_checks)
                for check, outcome in zip(checks, outcomes):
                    if outcome is not None:
                        self.results[check.name] = outcome
        except WorkbenchException:
            raise
        except Exception as e:
            logger.error(f"Fatal error in theorem lab: {e}")
            raise ValidationException(f"Theorem lab failed: {e}", code="LAB_FAILURE")
        report = self.report(names)
        logger.info(f"Theorem lab finished: {report}")
        return report

    def expand(self, names: Sequence[str]) -> List[str]:
        """The selected checks followed by every check they transitively require"""
        unknown = [name for name in names if name not in CHECKS]
        if unknown:
            raise ValidationException(f"Unknown checks {unknown}", code="UNKNOWN_CHECK",
                                      context={"known": sorted(CHECKS)})
        expanded = list(dict.fromkeys(names))
        for name in expanded:
            for dep in CHECKS[name].requires:
                if dep not in CHECKS:
                    raise ValidationException(f"{name} requires unknown check {dep}",
                                              code="MISSING_DEPENDENCY",
                                              context={"check": name, "requires": dep})
                if dep not in expanded:
                    expanded.append(dep)
        added = expanded[len(set(names)):]
        if added:
            logger.info(f"Adding required checks: {', '.join(added)}")
        return expanded

    def schedule(self, names: Sequence[str]) -> List[List[str]]:
        """Topological layers over the selected checks and everything they require"""
        pending = {name: set(CHECKS[name].requires) for name in self.expand(names)}
        layers: List[List[str]] = []
        done: set = set()
        while pending:
            ready = [name for name, deps in pending.items() if deps <= done]
            if not ready:
                raise ValidationException("Check dependencies form a cycle", code="CYCLE",
                                          context={"pending": sorted(pending)})
            layers.append(ready)
            done.update(ready)
            for name in ready:
                del pending[name]
        return layers

    def get_current_state(self) -> dict:
        """Progress of the run so far"""
        return {
            "subcommand": self.subcommand,
            "completed": sorted(self.results),
            "errors": {name: str(e) for name, e in self.errors.items()},
            "skipped": list(self.skipped),
            "theta_sign": self.context.theta_sign if self.context else None,
        }

    def report(self, names: Sequence[str]) -> VerificationReport:
        report = VerificationReport(self.config.config_hash(), self.subcommand,
                                    version=self.version)
        for name in names:
            for result in self.results.get(name, []):
                result.evidence.setdefault("config_hash", report.config_hash)
                report.add(result)
        return report

    def _setup(self, names: Sequence[str]) -> None:
        """Build the context and the M0 inverses before any check runs."""
        try:
            if self.context is None:
                self.context = ScatteringContext.from_config(self.config)
            if NEEDS_INVERSES & set(names):
                # built once, before checks share it
                self.context.s_curve
        except WorkbenchException as e:
            logger.error(f"Error setting up the scattering context: {e}")
            raise

    def _instantiate(self, name: str) -> TheoremCheck:
        check = CHECKS[name](self.context, self.config)
        check.upstream = {dep: self.results.get(dep, []) for dep in check.dependencies()}
        return check

    def _run_check(self, check: TheoremCheck) -> Optional[List[CheckResult]]:
        failed = [dep for dep in check.dependencies() if dep in self.errors]
        if failed:
            logger.warning(f"Skipping {check.name}: upstream {failed} failed")
            self.skipped.append(check.name)
            return [CheckResult(check.name, float("inf"), 0.0, Verdict.FAIL,
                                {"failed_dependencies": failed},
                                "upstream check failed")]
        if not check.should_run():
            logger.info(f"Skipping {check.name}: not applicable to these inputs")
            self.skipped.append(check.name)
            return None
        try:
            outcome = check.run()
        except WorkbenchException as e:
            logger.error(f"Check {check.name} failed: {e}")
            self.errors[check.name] = e
            return [CheckResult(check.name, float("inf"), 0.0, Verdict.FAIL,
                                {"code": e.code, "context": e.context}, e.message)]
        results = outcome if isinstance(outcome, list) else [outcome]
        for result in results:
            log = logger.success if result.verdict.ok else logger.warning
            log(f"{result}")
        return results
