from abc import ABC, abstractmethod
from functools import cached_property
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from waveop2d.config import RunConfig
from waveop2d.core.birman_schwinger import BSMatrix, invert_on_grid
from waveop2d.core.dilation import WINDOW_TOL, MellinCalculus, MellinSymbol, theta_symbol
from waveop2d.core.free_ops import (
    EnergyGrid,
    FiberedFunction,
    inverse_spectral_transform,
    make_energy_grid,
    spectral_transform,
)
from waveop2d.core.grid import Field2D, Grid2D, make_grid
from waveop2d.core.potential import (
    Potential,
    SupportQuadrature,
    VUFactorization,
    build_support,
    factorize,
    make_potential,
    sample_potential,
)
from waveop2d.core.smatrix import FiberOperator, apply_b, apply_fiberwise, build_s_curve
from waveop2d.exceptions import ScatteringMatrixException
from waveop2d.workbench_types import CheckResult


class ScatteringContext:
    """Shared immutable inputs of the theorem checks: grid, potential, support and energy fibers"""

    def __init__(
        self,
        grid: Grid2D,
        potential: Potential,
        egrid: EnergyGrid,
        n_omega: int = 64,
        v_cut: float = 1e-6,
        cap: int = 4000,
        tol_sing: float = 1e-10,
        margin_decades: float = 6.0,
        window_tol: float = WINDOW_TOL,
        inverses: Optional[Sequence[BSMatrix]] = None,
        threads: Optional[int] = None,
    ):
        self.grid = grid
        self.potential = potential
        self.egrid = egrid
        self.n_omega = n_omega
        self.tol_sing = tol_sing
        self.margin_decades = margin_decades
        self.window_tol = window_tol
        self.threads = threads
        self.v_field: Field2D = sample_potential(potential, grid)
        self.factorization: VUFactorization = factorize(self.v_field)
        self.quad: SupportQuadrature = build_support(self.factorization, v_cut, cap)
        self._inverses = list(inverses) if inverses is not None else None
        self.theta_sign = 1
        egrid.check_nyquist(grid)
        logger.info(f"Scattering context: {grid}, {potential}, {self.quad}, N_lambda={egrid.count}")

    @classmethod
    def from_config(cls, config: RunConfig, inverses: Optional[Sequence[BSMatrix]] = None,
                    threads: Optional[int] = None) -> "ScatteringContext":
        p, e = config.potential, config.energy
        return cls(
            grid=make_grid(config.grid.n, config.grid.half_width),
            potential=make_potential(p.tag, p.coupling, p.decay_exponent, p.params),
            egrid=make_energy_grid(e.count, e.lambda_max, e.lambda_min, e.spacing),
            n_omega=e.n_omega,
            v_cut=p.v_cut,
            cap=p.cap,
            tol_sing=e.tol_sing,
            margin_decades=config.dilation.margin_decades,
            window_tol=config.dilation.window_tol,
            inverses=inverses,
            threads=threads,
        )

    @property
    def potential_integral(self) -> float:
        """h^2 sum V, the lattice value of the integral of V"""
        return float(self.v_field.values.real.sum() * self.grid.cell_area)

    def use_inverses(self, inverses: Sequence[BSMatrix]) -> None:
        """Adopt precomputed (e.g. cached) inverses, one per energy of the grid."""
        if len(inverses) != self.egrid.count:
            raise ScatteringMatrixException(
                "One M0 inverse per energy is required", code="SHAPE",
                context={"inverses": len(inverses), "N_lambda": self.egrid.count},
            )
        self._inverses = list(inverses)
        self.__dict__.pop("s_curve", None)

    @property
    def inverses(self) -> List[BSMatrix]:
        if self._inverses is None:
            self._inverses = invert_on_grid(self.quad, self.egrid, self.tol_sing, self.threads)
        return self._inverses

    @cached_property
    def s_curve(self) -> List[FiberOperator]:
        return build_s_curve(self.quad, self.inverses, self.n_omega, self.threads)

    @cached_property
    def calculus(self) -> MellinCalculus:
        return MellinCalculus(self.egrid, self.margin_decades, self.window_tol)

    def theta(self) -> MellinSymbol:
        """theta(A+) with the sign fixed by the dilation convention audit"""
        symbol = theta_symbol()
        return symbol if self.theta_sign > 0 else symbol.reflected()

    def calculus_on(self, egrid: EnergyGrid) -> MellinCalculus:
        if egrid is self.egrid:
            return self.calculus
        return MellinCalculus(egrid, self.margin_decades, self.window_tol)

    def transform(self, f: Field2D, egrid: Optional[EnergyGrid] = None) -> FiberedFunction:
        return spectral_transform(f, egrid or self.egrid, self.n_omega, self.threads)

    def pull_back(self, phi: FiberedFunction) -> Field2D:
        return inverse_spectral_transform(phi, self.grid, self.threads)

    def apply_b(self, phi: FiberedFunction, mode: str = "exact") -> FiberedFunction:
        inverses = self.inverses if mode == "exact" else None
        return apply_b(phi, self.quad, inverses, mode)

    def s_minus_one(self, phi: FiberedFunction, adjoint: bool = False) -> FiberedFunction:
        return apply_fiberwise(self.s_curve, phi, minus_identity=True, adjoint=adjoint)

    def s_adjoint(self, phi: FiberedFunction) -> FiberedFunction:
        return apply_fiberwise(self.s_curve, phi, adjoint=True)


class TheoremCheck(ABC):
    """Base class for checks run by the theorem lab"""

    name: str = "check"
    requires: Tuple[str, ...] = ()

    def __init__(self, context: ScatteringContext, config: RunConfig):
        self.context = context
        self.config = config
        self.upstream: Dict[str, List[CheckResult]] = {}

    @abstractmethod
    def should_run(self) -> bool:
        """Whether the inputs support this check"""
        pass

    @abstractmethod
    def run(self) -> Union[CheckResult, List[CheckResult]]:
        """Compute the check and return its evidence"""
        pass

    def dependencies(self) -> List[str]:
        """Names of checks that must finish first"""
        return list(self.requires)

    def upstream_evidence(self, name: str, key: str, default=None):
        """Evidence value from an upstream check, default when it did not run"""
        for result in self.upstream.get(name, []):
            if key in result.evidence:
                return result.evidence[key]
        return default


def decay_ratio(values: Sequence[float]) -> float:
    """first / last of a sequence; inf when the last entry vanishes"""
    if len(values) < 2:
        return 1.0
    first, last = float(values[0]), float(values[-1])
    if last == 0.0:
        return float("inf") if first > 0.0 else 1.0
    return first / last


def spread_ratio(values: Sequence[float]) -> float:
    """max / min of a sequence, 1 for an identically zero sequence"""
    arr = np.asarray(values, dtype=float)
    if arr.size == 0 or arr.max() == 0.0:
        return 1.0
    if arr.min() == 0.0:
        return float("inf")
    return float(arr.max() / arr.min())
