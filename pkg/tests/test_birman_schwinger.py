import numpy as np
import pytest
from scipy.special import hankel1

from waveop2d.core.birman_schwinger import (
    assemble_m0,
    cell_average_kernel,
    high_energy_check,
    invert_m0,
    invert_on_grid,
    resolvent_kernel,
    sigma_min_at,
    zero_energy_diagnostic,
)
from waveop2d.core.free_ops import make_energy_grid
from waveop2d.core.potential import SupportQuadrature, build_support, factorize, sample_potential
from waveop2d.exceptions import BirmanSchwingerException, SupportException
from waveop2d.workbench_types import Verdict


def test_kernel_small_argument_series():
    k, r = 1.0, 1e-3
    euler_gamma = 0.5772156649015329
    expected = 0.25j * (1.0 + (2j / np.pi) * (np.log(k * r / 2.0) + euler_gamma))
    assert complex(resolvent_kernel(k, r)) == pytest.approx(expected, abs=1e-5)


def test_kernel_large_argument_modulus():
    k, r = 3.0, 200.0
    assert abs(resolvent_kernel(k, r)) == pytest.approx(0.25 * np.sqrt(2.0 / (np.pi * k * r)),
                                                        rel=1e-3)


def test_kernel_rejects_non_positive_wavenumber():
    with pytest.raises(BirmanSchwingerException):
        resolvent_kernel(0.0, 1.0)


def test_cell_average_matches_midpoint_refinement():
    k, h, m = 2.0, 0.1, 400
    offsets = (np.arange(m) + 0.5) / m * h - 0.5 * h
    r = np.hypot(offsets[:, None], offsets[None, :])
    brute = 0.25j * np.mean(hankel1(0, k * r))
    assert cell_average_kernel(k, h) == pytest.approx(brute, abs=2e-4)


def test_single_node_with_zero_v_is_identity(grid):
    quad = SupportQuadrature.single_node(grid)
    m = assemble_m0(4.0, quad)
    np.testing.assert_allclose(m.matrix, np.eye(1))


def test_assemble_refuses_threshold_and_empty_support(grid, quad, zero_potential):
    with pytest.raises(BirmanSchwingerException) as excinfo:
        assemble_m0(0.0, quad)
    assert excinfo.value.code == "ENERGY"
    empty = build_support(factorize(sample_potential(zero_potential, grid)), 1e-3, 4000)
    with pytest.raises(SupportException):
        assemble_m0(1.0, empty)


def test_m0_is_complex_symmetric(quad):
    m = assemble_m0(9.0, quad).matrix
    np.testing.assert_allclose(m, m.T, atol=1e-14)


def test_inverse_residual(quad):
    m = assemble_m0(9.0, quad)
    inverse = invert_m0(m)
    assert inverse.inverted
    np.testing.assert_allclose(m.matrix @ inverse.matrix, np.eye(quad.size), atol=1e-8)
    assert inverse.condition >= 1.0


def test_near_singular_inverse_is_refused(quad):
    m = assemble_m0(9.0, quad)
    with pytest.raises(BirmanSchwingerException) as excinfo:
        invert_m0(m, tol_sing=1e6)
    assert excinfo.value.code == "NEAR_SINGULAR"


def test_weak_coupling_inverse_is_neumann_first_order(grid, gaussian):
    g = 1e-3
    quad = build_support(factorize(sample_potential(gaussian.with_coupling(g), grid)), 1e-4, 4000)
    m = assemble_m0(4.0, quad)
    u = np.diag(quad.u)
    first_order = u - u @ (m.matrix - u) @ u
    coupling_part = np.linalg.norm(m.matrix - u, 2)
    residual = np.linalg.norm(invert_m0(m).matrix - first_order, 2)
    assert coupling_part < 0.1
    assert residual <= 2.0 * coupling_part ** 2


def test_empty_support_inverts_to_empty_matrices(grid, zero_potential, egrid):
    quad = build_support(factorize(sample_potential(zero_potential, grid)), 1e-3, 4000)
    inverses = invert_on_grid(quad, egrid)
    assert len(inverses) == egrid.count
    assert all(inv.size == 0 for inv in inverses)
    assert sigma_min_at(1.0, quad) == (1.0, 1.0)


def test_high_energy_defect_decreases(quad):
    egrid = make_energy_grid(12, 50.0, 0.5)
    result = high_energy_check(quad, egrid)
    assert result.verdict == Verdict.PASS
    defects = result.evidence["defects"]
    assert defects[-1] < defects[0]


def test_zero_energy_generic_for_empty_support(grid, zero_potential):
    quad = build_support(factorize(sample_potential(zero_potential, grid)), 1e-3, 4000)
    result = zero_energy_diagnostic(quad, [1e-1, 1e-2, 1e-3])
    assert result.verdict == Verdict.GENERIC
    assert result.defect == pytest.approx(1.0)


def test_zero_energy_ladder_must_decrease(quad):
    with pytest.raises(BirmanSchwingerException) as excinfo:
        zero_energy_diagnostic(quad, [1e-3, 1e-2])
    assert excinfo.value.code == "LADDER"
