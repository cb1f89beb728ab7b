import argparse
import sys
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import pandas as pd
from loguru import logger
from pydantic import ValidationError

from waveop2d import __version__
from waveop2d.cache import ResultCache, cached_inverses
from waveop2d.concurrency import set_default_threads
from waveop2d.config import RunConfig, WorkbenchSettings
from waveop2d.exceptions import ConfigurationException, ValidationException, WorkbenchException
from waveop2d.lab.base import ScatteringContext
from waveop2d.lab.theorem_lab import NEEDS_INVERSES, TheoremLab
from waveop2d.logging_utils import (
    console,
    print_report_summary,
    print_startup_banner,
    print_status_update,
    setup_logging,
)
from waveop2d.plots.charts import ChartManager
from waveop2d.report import (
    ReportBuilder,
    find_reports,
    load_report,
    smatrix_table,
    unitarity_table,
    write_csv,
)
from waveop2d.workbench_types import VerificationReport

EXIT_OK = 0
EXIT_COMPUTE = 1
EXIT_VALIDATION = 2

SUBCOMMAND_CHECKS: Dict[str, List[str]] = {
    "smatrix": ["smatrix_unitarity", "smatrix_high_energy", "m0_high_energy"],
    "bound-states": ["bound_states"],
    "zero-energy": ["zero_energy"],
    "wave-op": ["wave_operator_convergence", "intertwining_probe"],
    "levinson": ["zero_energy", "bound_states", "levinson"],
}
SUBCOMMANDS = [*SUBCOMMAND_CHECKS, "verify", "report"]


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="waveop2d", description="2D Schrodinger scattering workbench")
    parser.add_argument("--version", action="version", version=f"waveop2d {__version__}")
    parser.add_argument("subcommand", choices=SUBCOMMANDS)
    parser.add_argument("--config", required=True, type=Path,
                        help="experiment file (.toml or .json)")
    parser.add_argument("--cache-dir", type=Path, default=None)
    parser.add_argument("--out", type=Path, default=None, help="output directory")
    parser.add_argument("--threads", type=int, default=None)
    return parser


def initialize_config(args: argparse.Namespace, settings: WorkbenchSettings) -> RunConfig:
    """File, then environment, then CLI flags."""
    config = RunConfig.from_file(args.config)
    config = config.with_overrides(
        cache_dir=args.cache_dir or settings.cache_dir,
        output_dir=args.out or settings.output_dir,
    )
    logger.info(f"Loaded {args.config} (config {config.config_hash()[:12]})")
    logger.debug(f"Grid: n={config.grid.n}, L_box={config.grid.half_width}")
    logger.debug(f"Potential: {config.potential.tag}, g={config.potential.coupling}")
    logger.debug(f"Energies: N={config.energy.count}, Lambda_max={config.energy.lambda_max}")
    return config


def build_context(config: RunConfig, subcommand: str, names: Sequence[str],
                  threads: int) -> ScatteringContext:
    """Scattering context with M0 inverses from this subcommand's cache namespace"""
    context = ScatteringContext.from_config(config, threads=threads)
    if NEEDS_INVERSES & set(names):
        cache = ResultCache(config.cache_dir, subcommand, __version__)
        context.use_inverses(cached_inverses(cache, config, context.quad, context.egrid, threads))
    return context


def _bound_state_table(report: VerificationReport) -> pd.DataFrame:
    check = report.get("bound_states")
    energies = check.evidence.get("lattice_energies", []) if check else []
    residuals = check.evidence.get("residuals", []) if check else []
    oracle = check.evidence.get("oracle_energies") if check else None
    df = pd.DataFrame({"k": range(len(energies)), "energy": energies, "residual": residuals})
    if oracle is not None and len(oracle) == len(energies):
        df["oracle_energy"] = oracle
    return df


def export_tables(subcommand: str, report: VerificationReport,
                  context: Optional[ScatteringContext], out: Path) -> None:
    """Documented CSV tables of each subcommand"""
    if subcommand == "smatrix" and context is not None:
        write_csv(smatrix_table(context.s_curve), out / "smatrix.csv")
        write_csv(unitarity_table(context.s_curve), out / "unitarity.csv")
    if subcommand in ("bound-states", "levinson", "verify") and report.get("bound_states"):
        write_csv(_bound_state_table(report), out / "bound_states.csv")
    zero = report.get("zero_energy")
    if zero is not None and "ladder" in zero.evidence:
        write_csv(pd.DataFrame({"lambda": zero.evidence["ladder"],
                                "sigma_min": zero.evidence["sigma_min"],
                                "condition": zero.evidence["condition"]}),
                  out / "zero_energy.csv")
    levinson = report.get("levinson")
    if levinson is not None and "phase_curve" in levinson.evidence:
        curve = levinson.evidence["phase_curve"]
        write_csv(pd.DataFrame({"lambda": curve["energies"], "phase": curve["phases"]}),
                  out / "phase_curve.csv")


def run_lab(subcommand: str, config: RunConfig, threads: int) -> VerificationReport:
    names = SUBCOMMAND_CHECKS.get(subcommand, config.verify.checks)
    context = build_context(config, subcommand, names, threads)
    lab = TheoremLab(config, context, subcommand=subcommand, version=__version__)
    report = lab.run(names)
    print_status_update(lab.get_current_state())

    out = Path(config.output_dir) / subcommand
    builder = ReportBuilder(out)
    builder.add(report)
    builder.write_json(report)
    builder.write_checks_csv()
    export_tables(subcommand, report, context, out)
    ChartManager(out).write_report_charts(report)
    if lab.errors:
        raise ValidationException(
            f"{len(lab.errors)} check(s) failed to compute", code="CHECK_ERRORS",
            context={name: str(e) for name, e in lab.errors.items()},
        )
    return report


def run_report(config: RunConfig) -> VerificationReport:
    """Merge the per-subcommand reports of this config into one bundle."""
    builder = ReportBuilder(Path(config.output_dir) / "report")
    config_hash = config.config_hash()
    for path in find_reports(config.output_dir):
        report = load_report(path)
        if report.config_hash != config_hash:
            logger.warning(f"Skipping {path}: produced by config {report.config_hash[:12]}")
            continue
        builder.add(report)
    if not builder.reports:
        raise ValidationException("No reports for this config to merge", code="NO_REPORTS",
                                  context={"output_dir": str(config.output_dir)})
    merged = builder.merged(config_hash)
    builder.write_json(merged)
    builder.write_checks_csv()
    ChartManager(builder.output_dir).write_report_charts(merged)
    return merged


def run(subcommand: str, config: RunConfig, threads: int = 1) -> VerificationReport:
    """Execute one subcommand and write its artifacts."""
    if subcommand == "report":
        return run_report(config)
    return run_lab(subcommand, config, threads)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    settings = WorkbenchSettings.from_env()
    setup_logging(settings.log_dir, settings.log_level)
    print_startup_banner(__version__, args.subcommand)

    try:
        config = initialize_config(args, settings)
    except (ValidationError, ConfigurationException) as e:
        logger.error(f"Invalid configuration: {e}")
        return EXIT_VALIDATION

    threads = args.threads or settings.threads
    set_default_threads(threads)
    try:
        report = run(args.subcommand, config, threads)
    except WorkbenchException as e:
        logger.error(f"Error in {args.subcommand}: {e}")
        return EXIT_COMPUTE

    print_report_summary(report)
    return EXIT_OK if report.passed else EXIT_COMPUTE


if __name__ == '__main__':
    try:
        sys.exit(main())
    except KeyboardInterrupt:
        console.print("\n[yellow]Interrupted[/]")
        sys.exit(EXIT_COMPUTE)
