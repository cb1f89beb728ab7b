"""Full-size experiments; run with pytest -m slow."""
from pathlib import Path

import pytest

from waveop2d.config import RunConfig
from waveop2d.core.birman_schwinger import (
    high_energy_check,
    sigma_min_at,
    tune_resonant_coupling,
    zero_energy_diagnostic,
)
from waveop2d.core.free_ops import make_energy_grid, spectral_transform
from waveop2d.core.grid import WavePacketSpec, make_grid, make_packet
from waveop2d.core.potential import (
    CATALOG,
    build_support,
    factorize,
    make_potential,
    sample_potential,
)
from waveop2d.core.propagation import intertwining_probe
from waveop2d.core.smatrix import born_limit_check, smatrix_high_energy, unitarity_check
from waveop2d.exceptions import SpectralException
from waveop2d.lab.base import ScatteringContext
from waveop2d.lab.bound_states import radial_shooting_oracle, tune_bound_state_count
from waveop2d.lab.theorem_lab import TheoremLab
from waveop2d.workbench_types import Verdict

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

STATIONARY_CHECKS = ["wave_operator_crosscheck", "wplus_consistency", "remainder_compactness",
                     "commutator_compactness", "intertwining_probe"]

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def full_grid():
    return make_grid(256, 24.0)


@pytest.fixture(scope="module")
def unit_gaussian_report():
    """Stationary checks of the g=1 Gaussian well at full size, sharing one context"""
    return TheoremLab(RunConfig()).run(STATIONARY_CHECKS)


def test_parseval_on_the_full_grid(full_grid):
    packet = make_packet(full_grid, WavePacketSpec(momentum=(6.0, 0.0), width=1.5))
    phi = spectral_transform(packet, make_energy_grid(256, 100.0, 1e-3), 128)
    assert abs(phi.norm() ** 2 - packet.norm() ** 2) < 1e-4


def test_unit_gaussian_scattering_matrix_is_unitary(full_grid):
    ctx = ScatteringContext(full_grid, make_potential("gaussian_well", 1.0),
                            make_energy_grid(16, 100.0, 1e-3), n_omega=64)
    result = unitarity_check(ctx.s_curve, tol_unit=1e-3)
    assert result.verdict == Verdict.PASS


def test_born_residual_scales_quadratically(full_grid):
    result = born_limit_check(make_potential("gaussian_well", 1.0), full_grid, [1.0, 10.0])
    assert result.defect < 2.0


def test_stationary_checks_wait_for_the_convention_audit(unit_gaussian_report):
    audit = unit_gaussian_report.get("dilation_convention")
    assert audit is not None
    assert audit.verdict == Verdict.PASS
    assert audit.defect < 1e-2


def test_stationary_wave_operator_matches_time_domain(unit_gaussian_report):
    crosscheck = unit_gaussian_report.get("wave_operator_crosscheck")
    assert len(crosscheck.evidence["pairs"]) >= 3
    assert crosscheck.verdict == Verdict.PASS
    assert crosscheck.defect < 0.05


def test_stationary_wplus_matches_time_domain(unit_gaussian_report):
    wplus = unit_gaussian_report.get("wplus_consistency")
    assert wplus.verdict == Verdict.PASS
    assert wplus.defect < 0.05
    assert "time_domain" in wplus.evidence
    assert wplus.evidence["k_plus_defect"] < 1e-2


def test_remainder_decays_against_flat_scattering_control(unit_gaussian_report):
    remainder = unit_gaussian_report.get("remainder_compactness")
    assert remainder.verdict == Verdict.COMPACT_CONSISTENT
    assert remainder.evidence["decay_ratio"] >= 5.0
    assert remainder.evidence["control_spread"] < 2.0


def test_commutator_decays_and_constant_symbol_commutes(unit_gaussian_report):
    commutator = unit_gaussian_report.get("commutator_compactness")
    assert commutator.verdict == Verdict.COMPACT_CONSISTENT
    assert commutator.evidence["decay_ratio"] >= 5.0
    constant = unit_gaussian_report.get("commutator_constant_control")
    assert constant.verdict == Verdict.PASS
    assert all(norm == 0.0 for norm in constant.evidence["norms"])


def test_intertwining_with_the_potential_switched_on(unit_gaussian_report, full_grid):
    assert unit_gaussian_report.get("intertwining_probe").defect < 1e-2
    v_field = sample_potential(make_potential("gaussian_well", 1.0), full_grid)
    packet = make_packet(full_grid, WavePacketSpec(momentum=(0.0, 6.0), width=1.5))
    result = intertwining_probe(packet, 0.05, [0.2, 0.4, 0.8], 5e-4, v_field)
    assert result.defect < 1e-2


def test_resonant_coupling_collapses_sigma_min(full_grid):
    gaussian = make_potential("gaussian_well", 1.0)
    g_star, sigma_star = tune_resonant_coupling(gaussian, full_grid, 1e-4, (3.0, 12.0),
                                                v_cut=1e-3)
    generic = build_support(factorize(sample_potential(gaussian, full_grid)), 1e-3, 4000)
    sigma_generic, _ = sigma_min_at(1e-4, generic)
    assert sigma_generic / sigma_star >= 100.0

    tuned = build_support(factorize(sample_potential(gaussian.with_coupling(g_star),
                                                     full_grid)), 1e-3, 4000)
    diagnostic = zero_energy_diagnostic(tuned, [1e-1, 1e-2, 1e-3, 1e-4])
    assert diagnostic.verdict == Verdict.RESONANT_SUSPECT


@pytest.mark.parametrize("tag", sorted(CATALOG))
def test_high_energy_limits_for_every_catalog_potential(tag):
    grid = make_grid(128, 16.0)
    ctx = ScatteringContext(grid, make_potential(tag, 0.0 if tag == "zero" else 1.0),
                            make_energy_grid(16, 100.0, 1e-3), n_omega=32, v_cut=2e-2)
    assert high_energy_check(ctx.quad, ctx.egrid).verdict == Verdict.PASS
    assert smatrix_high_energy(ctx.s_curve).verdict == Verdict.PASS


def test_levinson_counts_the_single_bound_state():
    config = RunConfig.from_file(CONFIGS / "gaussian_levinson.toml")
    report = TheoremLab(config).run()
    assert report.get("bound_states").evidence["oracle_count"] == 1
    levinson = report.get("levinson")
    assert levinson.verdict == Verdict.PASS
    assert abs(levinson.evidence["nearest_integer"]) == 1
    assert levinson.defect < 0.05


def test_radial_gaussian_has_no_two_state_window():
    # the l = +-1 pair binds before the second s-state
    with pytest.raises(SpectralException) as excinfo:
        tune_bound_state_count(make_potential("gaussian_well", 1.0), 2, (2.0, 30.0))
    assert excinfo.value.code == "NO_WINDOW"
    assert excinfo.value.context["count_above"] == 3


def test_levinson_counts_the_degenerate_pair():
    gaussian = make_potential("gaussian_well", 1.0)
    g_in, g_out = tune_bound_state_count(gaussian, 3, (2.0, 30.0))
    coupling = min((g_in * g_out) ** 0.5, 12.0)
    assert g_in < coupling < g_out
    oracle = radial_shooting_oracle(gaussian.with_coupling(coupling), ell_max=2)
    assert oracle.count == 3
    assert sorted(level.ell for level in oracle.levels) == [0, 1]

    base = RunConfig.from_file(CONFIGS / "gaussian_levinson.toml")
    config = base.model_copy(update={
        "potential": base.potential.model_copy(update={"coupling": coupling})})
    report = TheoremLab(config).run()
    assert report.get("bound_states").evidence["oracle_count"] == 3
    levinson = report.get("levinson")
    assert levinson.verdict == Verdict.PASS
    assert abs(levinson.evidence["nearest_integer"]) == 3
