"""
Free-dynamics operators: the resolvent multiplier R0(z), the fiber spectral
transform F0(lambda) with its adjoint, and the fibered operator N.

F0(lambda) f (omega) = 2^{-1/2} (F f)(sqrt(lambda) omega). Off-lattice momenta are
evaluated with the direct trigonometric sum over the sampled field, which is the
band-limited interpolant of the dual-lattice values.
"""

from dataclasses import dataclass
from functools import lru_cache
from typing import Literal, Optional, Sequence, Union

import numpy as np
from loguru import logger

from waveop2d.concurrency import parallel_map
from waveop2d.core.grid import Field2D, Grid2D, apply_multiplier
from waveop2d.core.potential import SupportQuadrature
from waveop2d.exceptions import EnergyGridException, ResolventException
from waveop2d.workbench_types import CheckResult, Verdict

NYQUIST_MARGIN = 0.8
F0_PREFACTOR = 2.0 ** -0.5 / (2.0 * np.pi)


@lru_cache(maxsize=16)
def circle_directions(n_omega: int) -> np.ndarray:
    """Unit vectors omega_m at equispaced angles 2 pi m / N_omega."""
    if n_omega < 16 or n_omega % 2:
        raise EnergyGridException(
            "Angular resolution must be even and >= 16", code="N_OMEGA", context={"n_omega": n_omega}
        )
    theta = 2.0 * np.pi * np.arange(n_omega) / n_omega
    directions = np.stack([np.cos(theta), np.sin(theta)], axis=1)
    directions.setflags(write=False)
    return directions


@dataclass(frozen=True, eq=False)
class AngularFunction:
    """Samples on the unit circle with the trapezoid inner product (2 pi / N) sum"""
    values: np.ndarray

    @property
    def n_omega(self) -> int:
        return int(self.values.shape[0])

    @property
    def weight(self) -> float:
        return 2.0 * np.pi / self.n_omega

    def inner(self, other: "AngularFunction") -> complex:
        return complex(self.weight * np.vdot(self.values, other.values))

    def norm(self) -> float:
        return float(np.sqrt(self.weight * np.sum(np.abs(self.values) ** 2)))


@dataclass(frozen=True, eq=False)
class EnergyGrid:
    """Energies 0 < lambda_1 < ... < lambda_N = Lambda_max with quadrature weights"""
    energies: np.ndarray
    weights: np.ndarray
    spacing: Literal["log", "linear"]

    @property
    def count(self) -> int:
        return int(self.energies.size)

    @property
    def lambda_max(self) -> float:
        return float(self.energies[-1])

    @property
    def lambda_min(self) -> float:
        return float(self.energies[0])

    @property
    def log_step(self) -> float:
        """Uniform step in s = ln(lambda) for log grids"""
        if self.spacing != "log":
            raise EnergyGridException("Log step requested on a linear grid", code="SPACING")
        return float(np.log(self.energies[1] / self.energies[0]))

    def index_near(self, energy: float) -> int:
        return int(np.argmin(np.abs(np.log(self.energies / energy))))

    def check_nyquist(self, grid: Grid2D) -> None:
        limit = NYQUIST_MARGIN * grid.nyquist
        if np.sqrt(self.lambda_max) >= limit:
            raise EnergyGridException(
                "Lambda_max exceeds the Nyquist margin of the grid",
                code="NYQUIST",
                context={"sqrt_lambda_max": float(np.sqrt(self.lambda_max)), "limit": float(limit)},
            )


def make_energy_grid(
    count: int,
    lambda_max: float,
    lambda_min: float = 1e-3,
    spacing: Literal["log", "linear"] = "log",
) -> EnergyGrid:
    """Energy nodes with trapezoid weights (in s = ln lambda for log grids)."""
    if not 0.0 < lambda_min < lambda_max or count < 2:
        raise EnergyGridException(
            "Energy grid needs 0 < lambda_min < lambda_max and at least two nodes",
            code="RANGE", context={"lambda_min": lambda_min, "lambda_max": lambda_max, "count": count},
        )
    if spacing == "log":
        energies = np.geomspace(lambda_min, lambda_max, count)
        ds = np.log(lambda_max / lambda_min) / (count - 1)
        weights = energies * ds
    else:
        energies = np.linspace(lambda_min, lambda_max, count)
        weights = np.full(count, energies[1] - energies[0])
    weights[0] *= 0.5
    weights[-1] *= 0.5
    energies[-1] = lambda_max
    return EnergyGrid(energies=energies, weights=weights, spacing=spacing)


@dataclass(frozen=True, eq=False)
class FiberedFunction:
    """One fiber vector per energy; fibers are angular (weight 2 pi / N) or support (h^2)"""
    egrid: EnergyGrid
    values: np.ndarray
    fiber_weight: float

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.complex128)
        if values.ndim != 2 or values.shape[0] != self.egrid.count:
            raise EnergyGridException(
                "Fibered values must have shape (N_lambda, fiber_dim)",
                code="SHAPE", context={"shape": values.shape, "N_lambda": self.egrid.count},
            )
        object.__setattr__(self, "values", values)

    @classmethod
    def angular(cls, egrid: EnergyGrid, values: np.ndarray) -> "FiberedFunction":
        values = np.asarray(values)
        return cls(egrid, values, 2.0 * np.pi / values.shape[1])

    @property
    def fiber_dim(self) -> int:
        return int(self.values.shape[1])

    def fiber_norms(self) -> np.ndarray:
        return np.sqrt(self.fiber_weight * np.sum(np.abs(self.values) ** 2, axis=1))

    def norm(self) -> float:
        return float(np.sqrt(np.sum(self.egrid.weights * self.fiber_norms() ** 2)))

    def inner(self, other: "FiberedFunction") -> complex:
        per_fiber = np.einsum("ij,ij->i", self.values.conj(), other.values)
        return complex(self.fiber_weight * np.sum(self.egrid.weights * per_fiber))

    def with_values(self, values: np.ndarray) -> "FiberedFunction":
        return FiberedFunction(self.egrid, values, self.fiber_weight)

    def __add__(self, other: "FiberedFunction") -> "FiberedFunction":
        return self.with_values(self.values + other.values)

    def __sub__(self, other: "FiberedFunction") -> "FiberedFunction":
        return self.with_values(self.values - other.values)

    def __mul__(self, scalar: complex) -> "FiberedFunction":
        return self.with_values(scalar * self.values)

    __rmul__ = __mul__


def apply_r0(f: Field2D, z: complex) -> Field2D:
    """Free resolvent (-Delta - z)^{-1} as a Fourier multiplier, Im z != 0."""
    z = complex(z)
    if z.imag == 0.0:
        raise ResolventException(
            "R0(z) on the real axis needs the boundary kernel", code="REAL_Z", context={"z": z}
        )
    return apply_multiplier(f, 1.0 / (f.grid.momentum_squared - z))


def _check_energy(energy: float, grid: Grid2D) -> float:
    if not energy > 0.0:
        raise EnergyGridException("Energy must be positive", code="ENERGY", context={"lambda": energy})
    k = float(np.sqrt(energy))
    if k >= NYQUIST_MARGIN * grid.nyquist:
        raise EnergyGridException(
            "Energy too large for the grid", code="NYQUIST",
            context={"lambda": energy, "k": k, "limit": NYQUIST_MARGIN * grid.nyquist},
        )
    return k


def f0_matrix(energy: float, nodes: np.ndarray, weight: float, n_omega: int) -> np.ndarray:
    """Matrix of F0(lambda) from node samples (cell weight) to circle samples."""
    k = np.sqrt(energy)
    phase = circle_directions(n_omega) @ nodes.T
    return F0_PREFACTOR * weight * np.exp(-1j * k * phase)


def f0_adjoint_matrix(energy: float, nodes: np.ndarray, n_omega: int) -> np.ndarray:
    """Matrix of F0(lambda)^* from circle samples to node values."""
    k = np.sqrt(energy)
    phase = nodes @ circle_directions(n_omega).T
    return F0_PREFACTOR * (2.0 * np.pi / n_omega) * np.exp(1j * k * phase)


def _axis_phases(energy: float, grid: Grid2D, n_omega: int, sign: float):
    k = np.sqrt(energy)
    directions = circle_directions(n_omega)
    e1 = np.exp(sign * 1j * k * np.outer(directions[:, 0], grid.axis))
    e2 = np.exp(sign * 1j * k * np.outer(directions[:, 1], grid.axis))
    return e1, e2


def f0_at(energy: float, f: Field2D, n_omega: int) -> AngularFunction:
    """F0(lambda) f sampled at N_omega directions."""
    grid = f.grid
    _check_energy(energy, grid)
    e1, e2 = _axis_phases(energy, grid, n_omega, -1.0)
    partial = e1 @ f.values
    values = F0_PREFACTOR * grid.cell_area * np.einsum("mj,mj->m", partial, e2)
    return AngularFunction(values)


def f0_adjoint_at(
    energy: float,
    g: AngularFunction,
    targets: Union[Grid2D, np.ndarray],
) -> np.ndarray:
    """(F0(lambda)^* g)(x) at target nodes, or on the full grid when given a Grid2D."""
    n_omega = g.n_omega
    if isinstance(targets, Grid2D):
        _check_energy(energy, targets)
        e1, e2 = _axis_phases(energy, targets, n_omega, 1.0)
        prefactor = F0_PREFACTOR * (2.0 * np.pi / n_omega)
        return prefactor * (e1.T * g.values) @ e2
    if not energy > 0.0:
        raise EnergyGridException("Energy must be positive", code="ENERGY", context={"lambda": energy})
    return f0_adjoint_matrix(energy, np.asarray(targets, dtype=float), n_omega) @ g.values


def spectral_transform(
    f: Field2D, egrid: EnergyGrid, n_omega: int, threads: Optional[int] = None
) -> FiberedFunction:
    """F0 f on every energy of the grid."""
    egrid.check_nyquist(f.grid)
    fibers = parallel_map(lambda lam: f0_at(lam, f, n_omega).values, egrid.energies, threads)
    return FiberedFunction.angular(egrid, np.stack(fibers))


def inverse_spectral_transform(
    phi: FiberedFunction, grid: Grid2D, threads: Optional[int] = None
) -> Field2D:
    """F0^* phi = sum_i d lambda_i F0(lambda_i)^* phi(lambda_i) on the full grid."""
    egrid = phi.egrid
    egrid.check_nyquist(grid)

    def fiber(i: int) -> np.ndarray:
        return egrid.weights[i] * f0_adjoint_at(
            egrid.energies[i], AngularFunction(phi.values[i]), grid
        )

    parts = parallel_map(fiber, range(egrid.count), threads)
    return Field2D(grid, np.sum(parts, axis=0))


def apply_n(
    xi: Sequence[Field2D], egrid: EnergyGrid, n_omega: int, threads: Optional[int] = None
) -> FiberedFunction:
    """(N xi)(lambda) = F0(lambda) xi(lambda) for field-valued fibers."""
    if len(xi) != egrid.count:
        raise EnergyGridException(
            "One field per energy is required", code="SHAPE",
            context={"fields": len(xi), "N_lambda": egrid.count},
        )
    fibers = parallel_map(
        lambda i: f0_at(egrid.energies[i], xi[i], n_omega).values, range(egrid.count), threads
    )
    return FiberedFunction.angular(egrid, np.stack(fibers))


def apply_n_support(
    xi: FiberedFunction, quad: SupportQuadrature, n_omega: int, threads: Optional[int] = None
) -> FiberedFunction:
    """N on fibers living on the support quadrature (embedded fields)."""
    egrid = xi.egrid
    if quad.is_empty:
        return FiberedFunction.angular(egrid, np.zeros((egrid.count, n_omega), dtype=np.complex128))

    def fiber(i: int) -> np.ndarray:
        lam = egrid.energies[i]
        return f0_matrix(lam, quad.nodes, quad.weight, n_omega) @ xi.values[i]

    return FiberedFunction.angular(egrid, np.stack(parallel_map(fiber, range(egrid.count), threads)))


def _diagnostic_nodes(grid: Grid2D, quad: SupportQuadrature) -> np.ndarray:
    if not quad.is_empty:
        return quad.nodes
    x1, x2 = grid.coordinates
    disc = grid.radius <= min(3.0, 0.5 * grid.half_width)
    return np.stack([x1[disc], x2[disc]], axis=1)


def lemma_diagnostics(
    grid: Grid2D,
    quad: SupportQuadrature,
    egrid: EnergyGrid,
    t: float,
    n_omega: int = 64,
    tail_tolerance: float = 0.2,
    low_energy_tolerance: float = 0.05,
) -> CheckResult:
    """Norms of F0(lambda) <x>^{-t} on the quadrature: boundedness, low- and high-energy limits.

    The lambda -> 0 limit counts as settled when the two lowest rungs differ by less than
    low_energy_tolerance relative to the lowest.
    """
    if not t > 1.0:
        raise EnergyGridException("Decay index t must exceed 1", code="WEIGHT", context={"t": t})
    egrid.check_nyquist(grid)
    nodes = _diagnostic_nodes(grid, quad)
    decay = (1.0 + np.sum(nodes ** 2, axis=1)) ** (-0.5 * t)
    scale = np.sqrt(2.0 * np.pi / n_omega) / grid.spacing

    def operator_norm(lam: float) -> float:
        matrix = scale * f0_matrix(lam, nodes, grid.cell_area, n_omega) * decay[None, :]
        return float(np.linalg.norm(matrix, 2))

    norms = np.array(parallel_map(operator_norm, egrid.energies))
    weighted = (1.0 + egrid.energies ** 2) ** 0.125 * norms
    top = egrid.energies >= egrid.lambda_max / 10.0
    tail_variation = float(weighted[top].max() / weighted[top].min() - 1.0)
    low_change = float(abs(norms[1] - norms[0]) / norms[0])
    decade_index = egrid.index_near(egrid.lambda_max / 10.0)
    vanishing = bool(norms[-1] < norms[decade_index])
    finite = bool(np.all(np.isfinite(norms)) and np.all(norms > 0.0))

    if not finite or not vanishing:
        verdict = Verdict.FAIL
    elif tail_variation >= tail_tolerance or low_change >= low_energy_tolerance:
        verdict = Verdict.WARN
    else:
        verdict = Verdict.PASS
    logger.info(
        f"Lemma diagnostics: sup weighted norm {weighted.max():.4g}, "
        f"tail variation {tail_variation:.3f}, low-energy change {low_change:.3e}, "
        f"verdict {verdict.value}"
    )
    return CheckResult(
        name="lemma_diagnostics",
        defect=tail_variation,
        threshold=tail_tolerance,
        verdict=verdict,
        evidence={
            "energies": egrid.energies.tolist(),
            "norms": norms.tolist(),
            "weighted_norms": weighted.tolist(),
            "sup_weighted": float(weighted.max()),
            "low_energy_relative_change": low_change,
            "low_energy_tolerance": low_energy_tolerance,
            "low_energy_settled": low_change < low_energy_tolerance,
            "norm_at_lambda_max": float(norms[-1]),
            "norm_at_lambda_max_over_10": float(norms[decade_index]),
            "t": t,
        },
    )
