import numpy as np
import pytest

from waveop2d.core.potential import (
    build_support,
    decay_check,
    factorize,
    make_potential,
    sample_potential,
)
from waveop2d.exceptions import PotentialException, SupportException
from waveop2d.workbench_types import Verdict


def test_unknown_tag_is_rejected():
    with pytest.raises(PotentialException) as excinfo:
        make_potential("square_well")
    assert excinfo.value.code == "UNKNOWN_TAG"


def test_coupling_scales_samples(grid, gaussian):
    base = sample_potential(gaussian, grid).values
    doubled = sample_potential(gaussian.with_coupling(2.0), grid).values
    np.testing.assert_allclose(doubled, 2.0 * base)
    assert base.real.min() == pytest.approx(-1.0)


def test_factorization_reconstructs_v(grid):
    p = make_potential("two_bump", 1.5)
    v_field = sample_potential(p, grid)
    fact = factorize(v_field)
    np.testing.assert_allclose(fact.reconstruct(), v_field.values.real, atol=1e-14)
    assert set(np.unique(fact.u)) <= {-1.0, 1.0}


def test_support_matches_brute_force_scan(grid, gaussian):
    v_cut = 1e-2
    quad = build_support(factorize(sample_potential(gaussian, grid)), v_cut, 4000)
    x1, x2 = grid.coordinates
    expected = np.count_nonzero(np.sqrt(np.exp(-(x1 ** 2 + x2 ** 2))) > v_cut)
    assert quad.size == expected
    assert quad.weight == pytest.approx(grid.cell_area)
    np.testing.assert_allclose(quad.v * quad.u * quad.v,
                               sample_potential(gaussian, grid).values.real.ravel()[
                                   quad.flat_index])


def test_zero_potential_gives_empty_support(grid, zero_potential):
    quad = build_support(factorize(sample_potential(zero_potential, grid)), 1e-3, 4000)
    assert quad.is_empty


def test_support_rejects_bad_cut_and_cap(grid, gaussian):
    fact = factorize(sample_potential(gaussian, grid))
    with pytest.raises(SupportException) as excinfo:
        build_support(fact, 0.0, 4000)
    assert excinfo.value.code == "V_CUT"
    with pytest.raises(SupportException) as excinfo:
        build_support(fact, 1e-3, 10)
    assert excinfo.value.code == "CAP_EXCEEDED"
    with pytest.raises(SupportException) as excinfo:
        build_support(fact, 5.0, 4000)
    assert excinfo.value.code == "EMPTY_SUPPORT"


def test_decay_check_flags_slow_power_law(wide_grid):
    slow = make_potential("power_law", 1.0, decay_exponent=12.0, params={"power": 5.0})
    result = decay_check(slow, wide_grid)
    assert result.verdict == Verdict.FAIL
    assert result.evidence["sigma_fit"] < 12.0


def test_decay_check_warns_below_sufficiency_threshold(wide_grid):
    p = make_potential("gaussian_well", 1.0, decay_exponent=8.0)
    assert decay_check(p, wide_grid).verdict == Verdict.WARN


def test_decay_check_passes_gaussian(wide_grid, gaussian):
    assert decay_check(gaussian, wide_grid).verdict == Verdict.PASS


def test_gaussian_transform_matches_lattice_sum(grid, gaussian):
    # V^(xi) = int e^{-i xi.x} V(x) dx
    x1, x2 = grid.coordinates
    values = sample_potential(gaussian, grid).values.real
    xi = (1.3, -0.4)
    lattice = grid.cell_area * np.sum(np.exp(-1j * (xi[0] * x1 + xi[1] * x2)) * values)
    assert complex(gaussian.fourier_transform(np.array(xi[0]), np.array(xi[1]))) == \
        pytest.approx(lattice, abs=1e-10)
