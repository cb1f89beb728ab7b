import numpy as np
import pytest

from waveop2d.core.dilation import (
    MellinCalculus,
    apply_symbol_a_position,
    constant_symbol,
    custom_symbol,
    dilation_symbol,
    make_log_grid,
    make_polar_grid,
    r_symbol,
    theta_symbol,
)
from waveop2d.core.free_ops import FiberedFunction, make_energy_grid
from waveop2d.core.grid import WavePacketSpec, make_packet
from waveop2d.exceptions import DilationException


@pytest.fixture
def log_egrid():
    return make_energy_grid(64, 50.0, 1e-3)


@pytest.fixture
def calculus(log_egrid):
    return MellinCalculus(log_egrid)


def log_gaussian(egrid, center=5.0, width=0.5, fibers=3):
    """phi(lambda) = lambda^{-1/2} exp(-(ln lambda - ln c)^2 / 2 w^2), one column per fiber"""
    s = np.log(egrid.energies)
    profile = np.exp(-((s - np.log(center)) ** 2) / (2.0 * width ** 2)) / np.sqrt(egrid.energies)
    values = profile[:, None] * np.arange(1, fibers + 1)[None, :]
    return FiberedFunction.angular(egrid, values.astype(np.complex128))


def test_symbols_are_bounded_by_one():
    nu = np.linspace(-50.0, 50.0, 2001)
    for symbol in (theta_symbol(), r_symbol(), dilation_symbol(0.7)):
        assert np.abs(symbol(nu)).max() <= 1.0 + 1e-12
    assert theta_symbol()(np.array([0.0]))[0] == pytest.approx(0.5)


def test_theta_and_its_reflection_sum_to_one(calculus, log_egrid):
    phi = log_gaussian(log_egrid)
    theta = theta_symbol()
    total = calculus.apply(phi, theta) + calculus.apply(phi, theta.reflected())
    assert (total - phi).norm() < 1e-10 * phi.norm()


def test_constant_symbol_acts_as_scalar(calculus, log_egrid):
    phi = log_gaussian(log_egrid)
    out = calculus.apply(phi, constant_symbol(2.0))
    np.testing.assert_array_equal(out.values, 2.0 * phi.values)


def test_dilation_matches_rescaled_function(calculus, log_egrid):
    tau = 0.3
    phi = log_gaussian(log_egrid)
    dilated = calculus.dilate(phi, tau)
    expected = log_gaussian(log_egrid, center=5.0 * np.exp(-tau)).values
    np.testing.assert_allclose(dilated.values, expected, atol=1e-8)
    assert dilated.norm() == pytest.approx(phi.norm(), rel=1e-8)


def test_dilation_group_law(calculus, log_egrid):
    phi = log_gaussian(log_egrid)
    there_and_back = calculus.dilate(calculus.dilate(phi, 0.4), -0.4)
    assert (there_and_back - phi).norm() < 1e-8 * phi.norm()


def test_dilation_beyond_margin_is_refused(calculus, log_egrid):
    with pytest.raises(DilationException) as excinfo:
        calculus.dilate(log_gaussian(log_egrid), 100.0)
    assert excinfo.value.code == "RANGE"


def test_log_grid_contains_energy_range(log_egrid):
    grid = make_log_grid(log_egrid, 6.0)
    assert grid.count & (grid.count - 1) == 0
    s_interior = grid.s_values[grid.interior]
    np.testing.assert_allclose(np.exp(s_interior), log_egrid.energies, rtol=1e-10)
    assert grid.margin > 5.0 * np.log(10.0)


def test_unbounded_symbol_is_refused():
    with pytest.raises(DilationException) as excinfo:
        custom_symbol("pole", lambda nu: np.where(np.abs(nu) < 1.0, np.inf, 1.0))
    assert excinfo.value.code == "UNBOUNDED"


def test_window_leak_is_detected(log_egrid):
    calculus = MellinCalculus(log_egrid, window_tol=1e-9)
    flat = FiberedFunction.angular(log_egrid, np.ones((log_egrid.count, 2), dtype=np.complex128))
    with pytest.raises(DilationException) as excinfo:
        calculus.apply(flat, theta_symbol())
    assert excinfo.value.code == "WINDOW_UNDERFLOW"


def test_position_calculus_constant_is_exact(grid, packet):
    out = apply_symbol_a_position(packet, constant_symbol(1.0))
    np.testing.assert_array_equal(out.values, packet.values)


def test_position_calculus_refuses_boundary_leak(grid):
    wide = make_packet(grid, WavePacketSpec(width=1.0, normalized=False))
    leaking = wide.with_values(wide.values + 1e-3)
    with pytest.raises(DilationException) as excinfo:
        apply_symbol_a_position(leaking, r_symbol())
    assert excinfo.value.code == "BOUNDARY"


def test_polar_grid_defaults_are_powers_of_two(grid):
    polar = make_polar_grid(grid)
    assert polar.n_theta & (polar.n_theta - 1) == 0
    assert polar.n_sigma & (polar.n_sigma - 1) == 0
    with pytest.raises(DilationException):
        make_polar_grid(grid, n_sigma=100)
