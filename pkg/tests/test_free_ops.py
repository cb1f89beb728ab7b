import numpy as np
import pytest
from scipy.special import j0

from waveop2d.core.free_ops import (
    AngularFunction,
    FiberedFunction,
    apply_n_support,
    apply_r0,
    circle_directions,
    f0_adjoint_at,
    f0_at,
    inverse_spectral_transform,
    lemma_diagnostics,
    make_energy_grid,
    spectral_transform,
)
from waveop2d.core.grid import apply_multiplier
from waveop2d.core.potential import build_support, factorize, sample_potential
from waveop2d.exceptions import EnergyGridException, ResolventException
from waveop2d.workbench_types import Verdict


@pytest.fixture
def fine_egrid():
    return make_energy_grid(64, 50.0, 1e-3)


def test_circle_directions_are_unit_vectors():
    directions = circle_directions(32)
    np.testing.assert_allclose(np.hypot(directions[:, 0], directions[:, 1]), 1.0)
    with pytest.raises(EnergyGridException):
        circle_directions(17)


def test_energy_grid_endpoints_and_weights():
    egrid = make_energy_grid(16, 20.0, 1e-2)
    assert egrid.lambda_max == 20.0
    assert egrid.lambda_min == pytest.approx(1e-2)
    # trapezoid in s = ln(lambda) integrates d lambda exactly up to O(ds^2)
    assert egrid.weights.sum() == pytest.approx(20.0 - 1e-2, rel=5e-2)
    with pytest.raises(EnergyGridException):
        make_energy_grid(16, 1.0, 2.0)


def test_nyquist_margin_is_enforced(grid):
    egrid = make_energy_grid(8, 200.0)
    with pytest.raises(EnergyGridException) as excinfo:
        egrid.check_nyquist(grid)
    assert excinfo.value.code == "NYQUIST"


def test_free_resolvent_inverts_the_laplacian(packet):
    z = 9.0 + 0.5j
    resolved = apply_r0(packet, z)
    restored = apply_multiplier(resolved, packet.grid.momentum_squared - z)
    np.testing.assert_allclose(restored.values, packet.values, atol=1e-12)


def test_free_resolvent_refuses_real_axis(packet):
    with pytest.raises(ResolventException) as excinfo:
        apply_r0(packet, 4.0)
    assert excinfo.value.code == "REAL_Z"


def test_spectral_transform_preserves_norm(packet, fine_egrid):
    phi = spectral_transform(packet, fine_egrid, 64)
    assert phi.norm() == pytest.approx(packet.norm(), rel=1e-2)


def test_spectral_transform_round_trip(packet, fine_egrid):
    phi = spectral_transform(packet, fine_egrid, 64)
    back = inverse_spectral_transform(phi, packet.grid)
    assert (back - packet).norm() < 5e-2


def test_f0_adjoint_is_the_adjoint(packet, grid, rng):
    energy, n_omega = 16.0, 64
    g = AngularFunction(rng.normal(size=n_omega) + 1j * rng.normal(size=n_omega))
    left = g.inner(f0_at(energy, packet, n_omega))
    image = f0_adjoint_at(energy, g, grid)
    right = grid.cell_area * np.vdot(image, packet.values)
    assert left == pytest.approx(right, rel=1e-10)


def test_f0_adjoint_of_constant_is_bessel():
    # F0(lambda)^* 1 is radial and proportional to J0(sqrt(lambda) |x|)
    energy, n_omega = 4.0, 64
    ones = AngularFunction(np.ones(n_omega, dtype=np.complex128))
    nodes = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 2.0], [1.5, 1.5]])
    values = f0_adjoint_at(energy, ones, nodes)
    expected = values[0] * j0(2.0 * np.hypot(nodes[:, 0], nodes[:, 1]))
    np.testing.assert_allclose(values, expected, atol=1e-12)


def test_apply_n_support_on_empty_support(grid, zero_potential, egrid):
    quad = build_support(factorize(sample_potential(zero_potential, grid)), 1e-3, 4000)
    xi = FiberedFunction(egrid, np.zeros((egrid.count, 0)), quad.weight)
    out = apply_n_support(xi, quad, 32)
    assert out.values.shape == (egrid.count, 32)
    assert out.norm() == 0.0


def test_lemma_diagnostics_on_gaussian_support(grid, quad, egrid):
    result = lemma_diagnostics(grid, quad, egrid, 1.5, 64)
    assert result.verdict in (Verdict.PASS, Verdict.WARN)
    norms = np.asarray(result.evidence["norms"])
    assert np.all(np.isfinite(norms)) and np.all(norms > 0.0)
    assert result.evidence["norm_at_lambda_max"] < result.evidence["norm_at_lambda_max_over_10"]
    assert result.evidence["low_energy_settled"]
    assert result.evidence["low_energy_relative_change"] < 0.05


def test_unsettled_low_energy_limit_warns(grid, quad, egrid):
    result = lemma_diagnostics(grid, quad, egrid, 1.5, 64, low_energy_tolerance=1e-12)
    assert result.verdict == Verdict.WARN
    assert not result.evidence["low_energy_settled"]


def test_lemma_diagnostics_rejects_weak_weight(grid, quad, egrid):
    with pytest.raises(EnergyGridException):
        lemma_diagnostics(grid, quad, egrid, 1.0)
