import numpy as np
import pytest

from waveop2d.core.grid import (
    Field2D,
    WavePacketSpec,
    boundary_ratio,
    fourier,
    inner_product,
    make_grid,
    make_packet,
    packet_moments,
    weight_norm,
)
from waveop2d.exceptions import GridException


def test_grid_rejects_non_power_of_two():
    with pytest.raises(GridException) as excinfo:
        make_grid(100, 8.0)
    assert excinfo.value.code == "FFT_CONTRACT"


def test_grid_spacing_and_nyquist(grid):
    assert grid.spacing == pytest.approx(0.25)
    assert grid.nyquist == pytest.approx(np.pi / 0.25)
    assert grid.axis[0] == pytest.approx(-8.0)


def test_fourier_is_unitary(grid, rng):
    values = rng.normal(size=(64, 64)) + 1j * rng.normal(size=(64, 64))
    f = Field2D(grid, values)
    transformed = fourier(f)
    assert transformed.space == "momentum"
    assert transformed.norm() / f.norm() == pytest.approx(1.0, abs=1e-12)
    back = fourier(transformed, "inverse")
    np.testing.assert_allclose(back.values, f.values, atol=1e-12)


def test_fourier_rejects_wrong_representation(grid, packet):
    with pytest.raises(GridException):
        fourier(packet, "inverse")


def test_packet_is_normalized_and_centred(grid):
    f = make_packet(grid, WavePacketSpec(center=(1.0, -0.5), momentum=(3.0, 1.0), width=0.8))
    assert f.norm() == pytest.approx(1.0, abs=1e-12)
    moments = packet_moments(f)
    assert moments.center == pytest.approx((1.0, -0.5), abs=1e-6)
    assert moments.momentum == pytest.approx((3.0, 1.0), abs=1e-6)
    assert moments.width == pytest.approx(0.8, rel=1e-3)


def test_packet_near_boundary_is_refused(grid):
    with pytest.raises(GridException) as excinfo:
        make_packet(grid, WavePacketSpec(center=(6.5, 0.0), width=1.0))
    assert excinfo.value.code == "BOUNDARY_TAIL"


def test_inner_product_is_conjugate_linear_in_first_slot(grid, packet):
    other = make_packet(grid, WavePacketSpec(center=(0.5, 0.0), momentum=(4.0, 0.0)))
    assert inner_product(packet * 2j, other) == pytest.approx(-2j * inner_product(packet, other))
    assert inner_product(packet, packet) == pytest.approx(1.0)


def test_weight_norm_matches_radial_quadrature(grid):
    # ||<x>^2 e^{-|x|^2/2}||^2 = 2 pi int (1 + r^2)^2 e^{-r^2} r dr = pi (1 + 2 + 2)
    f = make_packet(grid, WavePacketSpec(width=1.0, normalized=False))
    assert weight_norm(f, 2.0) ** 2 == pytest.approx(5.0 * np.pi, rel=1e-8)


def test_boundary_ratio_of_compact_packet_is_tiny(packet):
    assert boundary_ratio(packet) < 1e-12
