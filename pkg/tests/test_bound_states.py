import numpy as np
import pytest

from waveop2d.core.grid import zero_field
from waveop2d.core.potential import make_potential, sample_potential
from waveop2d.exceptions import SpectralException
from waveop2d.lab.bound_states import (
    BoundStateSet,
    bound_state_check,
    bound_states,
    radial_shooting_oracle,
    tune_bound_state_count,
)
from waveop2d.workbench_types import Verdict


def test_free_hamiltonian_has_no_bound_states(grid):
    result = bound_states(zero_field(grid))
    assert result.count == 0


def test_unresolved_well_is_refused(grid):
    deep = sample_potential(make_potential("gaussian_well", 10.0), grid)
    with pytest.raises(SpectralException) as excinfo:
        bound_states(deep)
    assert excinfo.value.code == "RESOLUTION"


def test_deep_well_lattice_states_are_orthonormal(grid):
    v_field = sample_potential(make_potential("gaussian_well", 5.0), grid)
    result = bound_states(v_field, k_max=4)
    assert result.count >= 1
    assert np.all(np.diff(result.energies) >= 0.0)
    assert np.all(result.energies < 0.0)
    assert result.orthonormality_defect() < 1e-8
    assert max(result.residuals) < 1e-6 * max(1.0, abs(result.energies[0]))


def test_ground_state_matches_shooting_oracle(grid):
    potential = make_potential("gaussian_well", 5.0)
    lattice = bound_states(sample_potential(potential, grid), k_max=4)
    oracle = radial_shooting_oracle(potential, ell_max=0)
    assert oracle.count >= 1
    assert lattice.energies[0] == pytest.approx(oracle.energies_2d()[0], rel=2e-2)


def test_weak_gaussian_binds_exactly_one_s_state():
    oracle = radial_shooting_oracle(make_potential("gaussian_well", 0.5), ell_max=1)
    assert oracle.count == 1
    assert oracle.levels[0].ell == 0
    assert oracle.levels[0].nodes == 0
    assert oracle.levels[0].energy < 0.0


def test_oracle_refuses_non_radial_potentials():
    with pytest.raises(SpectralException) as excinfo:
        radial_shooting_oracle(make_potential("two_bump", 1.0))
    assert excinfo.value.code == "NOT_RADIAL"


def test_oracle_of_zero_potential_is_empty():
    assert radial_shooting_oracle(make_potential("zero", 0.0)).count == 0


def test_check_without_oracle_warns():
    lattice = BoundStateSet(np.array([-1.0]), residuals=[1e-12])
    assert bound_state_check(lattice, None).verdict == Verdict.WARN


def test_check_rejects_count_mismatch():
    lattice = BoundStateSet(np.array([-1.0, -0.5]), residuals=[0.0, 0.0])
    oracle = radial_shooting_oracle(make_potential("zero", 0.0))
    result = bound_state_check(lattice, oracle)
    assert result.verdict == Verdict.FAIL
    assert result.evidence["oracle_count"] == 0


@pytest.mark.parametrize("bracket", [(0.0, 1.0), (2.0, 1.0)])
def test_tuning_rejects_invalid_brackets(bracket):
    with pytest.raises(SpectralException) as excinfo:
        tune_bound_state_count(make_potential("gaussian_well", 1.0), 2, bracket)
    assert excinfo.value.code == "BRACKET"


def test_tuning_needs_a_bracket_straddling_the_target():
    with pytest.raises(SpectralException) as excinfo:
        tune_bound_state_count(make_potential("gaussian_well", 1.0), 1, (0.5, 0.6), ell_max=1)
    assert excinfo.value.code == "BRACKET"
    assert excinfo.value.context["counts"] == [1, 1]
