"""
Square-grid discretization of R^2.

Fourier convention: (F f)(xi) = (2 pi)^-1 \\int e^{-i xi.x} f(x) dx, realised on the
grid by a phase-corrected FFT so that the discrete transform is unitary between the
position lattice (cell area h^2) and the dual lattice (cell area (2 pi / (n h))^2).
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Literal, Optional, Tuple

import numpy as np
from loguru import logger

from waveop2d.exceptions import GridException

Space = Literal["position", "momentum"]

BOUNDARY_TAIL = 1e-8


@dataclass(frozen=True)
class Grid2D:
    """n x n nodes x_j in [-L_box, L_box)^2 with spacing h = 2 L_box / n"""
    n: int
    half_width: float

    def __post_init__(self) -> None:
        if self.n < 8 or self.n & (self.n - 1):
            raise GridException(
                f"Grid size must be a power of two >= 8, got {self.n}",
                code="FFT_CONTRACT",
                context={"n": self.n},
            )
        if not self.half_width > 0:
            raise GridException(
                "Box half-width must be positive",
                code="BOX",
                context={"half_width": self.half_width},
            )

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.n

    @property
    def cell_area(self) -> float:
        return self.spacing ** 2

    @property
    def dual_spacing(self) -> float:
        return 2.0 * np.pi / (self.n * self.spacing)

    @property
    def nyquist(self) -> float:
        """Largest representable wavenumber pi / h"""
        return np.pi / self.spacing

    @cached_property
    def axis(self) -> np.ndarray:
        return -self.half_width + self.spacing * np.arange(self.n)

    @cached_property
    def momentum_axis(self) -> np.ndarray:
        """Dual-lattice wavenumbers in FFT order, spanning [-pi/h, pi/h)"""
        return 2.0 * np.pi * np.fft.fftfreq(self.n, d=self.spacing)

    @cached_property
    def coordinates(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.axis, self.axis, indexing="ij")

    @cached_property
    def momenta(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.momentum_axis, self.momentum_axis, indexing="ij")

    @cached_property
    def radius(self) -> np.ndarray:
        x1, x2 = self.coordinates
        return np.hypot(x1, x2)

    @cached_property
    def momentum_squared(self) -> np.ndarray:
        k1, k2 = self.momenta
        return k1 ** 2 + k2 ** 2

    @cached_property
    def fourier_phase(self) -> np.ndarray:
        # x_j = -L + h j shifts the DFT by e^{i xi L} per axis
        k1, k2 = self.momenta
        return np.exp(1j * (k1 + k2) * self.half_width)

    def area(self, space: Space) -> float:
        return self.cell_area if space == "position" else self.dual_spacing ** 2

    def __str__(self) -> str:
        return f"Grid2D(n={self.n}, L_box={self.half_width}, h={self.spacing:.5g})"


@dataclass(frozen=True, eq=False)
class Field2D:
    """Complex samples on a Grid2D, in position or momentum representation"""
    grid: Grid2D
    values: np.ndarray
    space: Space = "position"

    def __post_init__(self) -> None:
        values = np.array(self.values, dtype=np.complex128)
        if values.shape != (self.grid.n, self.grid.n):
            raise GridException(
                "Field shape does not match grid",
                code="SHAPE",
                context={"shape": values.shape, "n": self.grid.n},
            )
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def _check_compatible(self, other: "Field2D") -> None:
        if other.grid != self.grid or other.space != self.space:
            raise GridException(
                "Fields live on different grids or representations",
                code="GRID_MISMATCH",
                context={"left": str(self.grid), "right": str(other.grid)},
            )

    def norm(self) -> float:
        return float(np.sqrt(self.grid.area(self.space) * np.sum(np.abs(self.values) ** 2)))

    def with_values(self, values: np.ndarray) -> "Field2D":
        return Field2D(self.grid, values, self.space)

    def __add__(self, other: "Field2D") -> "Field2D":
        self._check_compatible(other)
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "Field2D") -> "Field2D":
        self._check_compatible(other)
        return self.with_values(self.values - other.values)

    def __mul__(self, scalar: complex) -> "Field2D":
        return self.with_values(scalar * self.values)

    __rmul__ = __mul__


@dataclass(frozen=True)
class WavePacketSpec:
    """Gaussian packet e^{i q0.x} e^{-|x-x0|^2 / (2 w^2)}"""
    center: Tuple[float, float] = (0.0, 0.0)
    momentum: Tuple[float, float] = (0.0, 0.0)
    width: float = 1.0
    normalized: bool = True

    def __post_init__(self) -> None:
        if not self.width > 0:
            raise GridException("Packet width must be positive", code="PACKET",
                                context={"width": self.width})


def make_grid(n: int, half_width: float) -> Grid2D:
    """Build a square grid; rejects sizes that break the FFT contract."""
    grid = Grid2D(n=int(n), half_width=float(half_width))
    logger.debug(f"Built {grid}")
    return grid


def zero_field(grid: Grid2D, space: Space = "position") -> Field2D:
    return Field2D(grid, np.zeros((grid.n, grid.n), dtype=np.complex128), space)


def fourier(f: Field2D, direction: Literal["forward", "inverse"] = "forward") -> Field2D:
    """Unitary 2D Fourier transform between position and momentum lattices."""
    grid = f.grid
    scale = grid.cell_area / (2.0 * np.pi)
    if direction == "forward":
        if f.space != "position":
            raise GridException("Forward transform expects a position field", code="SPACE")
        return Field2D(grid, scale * grid.fourier_phase * np.fft.fft2(f.values), "momentum")
    if f.space != "momentum":
        raise GridException("Inverse transform expects a momentum field", code="SPACE")
    values = np.fft.ifft2(f.values / grid.fourier_phase) / scale
    return Field2D(grid, values, "position")


def apply_multiplier(f: Field2D, symbol: np.ndarray) -> Field2D:
    """F^-1 [symbol(xi) F f] for a position field."""
    transformed = fourier(f, "forward")
    return fourier(transformed.with_values(symbol * transformed.values), "inverse")


def inner_product(f: Field2D, g: Field2D) -> complex:
    """<f, g> = area * sum conj(f) g, conjugate-linear in f."""
    f._check_compatible(g)
    return complex(f.grid.area(f.space) * np.vdot(f.values, g.values))


def make_packet(grid: Grid2D, spec: WavePacketSpec) -> Field2D:
    """Sample a Gaussian packet; refuses packets that reach the box boundary."""
    x1, x2 = grid.coordinates
    c1, c2 = spec.center
    q1, q2 = spec.momentum
    envelope = np.exp(-((x1 - c1) ** 2 + (x2 - c2) ** 2) / (2.0 * spec.width ** 2))
    edge = max(
        envelope[0, :].max(), envelope[-1, :].max(), envelope[:, 0].max(), envelope[:, -1].max()
    )
    if edge > BOUNDARY_TAIL * envelope.max() or envelope.max() == 0.0:
        raise GridException(
            "Packet tail reaches the box boundary",
            code="BOUNDARY_TAIL",
            context={"edge_ratio": float(edge), "center": spec.center, "width": spec.width},
        )
    field_ = Field2D(grid, envelope * np.exp(1j * (q1 * x1 + q2 * x2)))
    if spec.normalized:
        field_ = field_ * (1.0 / field_.norm())
    return field_


def weight_norm(f: Field2D, t: float) -> float:
    """Weighted norm ||<x>^t f|| with <x> = (1 + |x|^2)^{1/2}."""
    weight = (1.0 + f.grid.radius ** 2) ** (0.5 * t)
    return float(np.sqrt(f.grid.cell_area * np.sum(np.abs(weight * f.values) ** 2)))


def boundary_ratio(f: Field2D) -> float:
    """Largest boundary modulus relative to the peak (aliasing control)."""
    mod = np.abs(f.values)
    peak = mod.max()
    if peak == 0.0:
        return 0.0
    edge = max(mod[0, :].max(), mod[-1, :].max(), mod[:, 0].max(), mod[:, -1].max())
    return float(edge / peak)


@dataclass(frozen=True)
class PacketMoments:
    center: Tuple[float, float]
    momentum: Tuple[float, float]
    width: float


def packet_moments(f: Field2D) -> PacketMoments:
    """Centre, mean momentum and Gaussian-equivalent width of a field."""
    grid = f.grid
    density = np.abs(f.values) ** 2
    mass = density.sum()
    if mass == 0.0:
        return PacketMoments((0.0, 0.0), (0.0, 0.0), 0.0)
    x1, x2 = grid.coordinates
    c1 = float((density * x1).sum() / mass)
    c2 = float((density * x2).sum() / mass)
    variance = float((density * ((x1 - c1) ** 2 + (x2 - c2) ** 2)).sum() / mass) / 2.0
    spectrum = np.abs(fourier(f).values) ** 2
    k1, k2 = grid.momenta
    q1 = float((spectrum * k1).sum() / spectrum.sum())
    q2 = float((spectrum * k2).sum() / spectrum.sum())
    return PacketMoments((c1, c2), (q1, q2), float(np.sqrt(2.0 * variance)))


def low_energy_fraction(f: Field2D, energy_cut: float) -> float:
    """Fraction of |F f|^2 carried by |xi|^2 < energy_cut."""
    spectrum = np.abs(fourier(f).values) ** 2
    total = spectrum.sum()
    if total == 0.0:
        return 0.0
    return float(spectrum[f.grid.momentum_squared < energy_cut].sum() / total)


def field_from_function(grid: Grid2D, func, space: Space = "position") -> Field2D:
    """Sample func(x1, x2) on the grid nodes (or dual nodes)."""
    a, b = grid.coordinates if space == "position" else grid.momenta
    return Field2D(grid, func(a, b), space)


def embed(grid: Grid2D, flat_index: np.ndarray, samples: np.ndarray,
          base: Optional[np.ndarray] = None) -> Field2D:
    """Place samples at the given row-major node indices, zero elsewhere."""
    values = np.zeros(grid.n * grid.n, dtype=np.complex128) if base is None else base.ravel().copy()
    values[flat_index] = samples
    return Field2D(grid, values.reshape(grid.n, grid.n))
