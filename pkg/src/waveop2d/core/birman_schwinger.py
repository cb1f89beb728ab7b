"""
Birman-Schwinger matrices M0(lambda + i0) = u + v R0(lambda + i0) v on the support quadrature.

The boundary value is taken through the outgoing kernel (i/4) H0^(1)(k r); the log
singularity on the diagonal is removed by an analytic cell average.
"""

from dataclasses import dataclass, replace
from typing import List, Optional, Sequence, Tuple

import numpy as np
from loguru import logger
from scipy.optimize import minimize_scalar
from scipy.special import hankel1

from waveop2d.concurrency import parallel_map
from waveop2d.core.free_ops import EnergyGrid
from waveop2d.core.grid import Grid2D
from waveop2d.core.potential import (
    Potential,
    SupportQuadrature,
    build_support,
    factorize,
    sample_potential,
)
from waveop2d.exceptions import BirmanSchwingerException, SupportException
from waveop2d.workbench_types import CheckResult, Verdict

TOL_SING = 1e-10
RESIDUAL_TOL = 1e-8
GAUSS_ORDER = 8


def resolvent_kernel(k: float, r: np.ndarray) -> np.ndarray:
    """Outgoing free kernel (i/4) H0^(1)(k r) of R0(k^2 + i0)."""
    if not k > 0.0:
        raise BirmanSchwingerException(
            "Wavenumber must be positive", code="WAVENUMBER", context={"k": k}
        )
    return 0.25j * hankel1(0, k * np.asarray(r, dtype=float))


def cell_average_kernel(k: float, h: float, order: int = GAUSS_ORDER) -> complex:
    """Average of (i/4) H0^(1)(k|x|) over the h x h cell centred at 0."""
    # mean of ln|x| over the square of side h
    mean_log = np.log(h) - 0.5 * np.log(2.0) - 1.5 + 0.25 * np.pi
    nodes, weights = np.polynomial.legendre.leggauss(order)
    x = 0.5 * h * nodes
    r = np.hypot(x[:, None], x[None, :])
    w = 0.25 * np.outer(weights, weights)
    remainder = hankel1(0, k * r) - (2j / np.pi) * np.log(r)
    return complex(0.25j * ((2j / np.pi) * mean_log + np.sum(w * remainder)))


@dataclass(frozen=True, eq=False)
class BSMatrix:
    """M0(lambda + i0) on a quadrature, or its inverse when inverted is set"""
    energy: float
    matrix: np.ndarray
    quad: SupportQuadrature
    condition: Optional[float] = None
    sigma_min: Optional[float] = None
    inverted: bool = False

    @property
    def size(self) -> int:
        return int(self.matrix.shape[0])

    def __str__(self) -> str:
        kind = "M0^-1" if self.inverted else "M0"
        cond = f"{self.condition:.3e}" if self.condition is not None else "n/a"
        return f"BSMatrix({kind}, lambda={self.energy:.4g}, n_s={self.size}, cond={cond})"


def assemble_m0(energy: float, quad: SupportQuadrature) -> BSMatrix:
    """M[p, q] = u_p delta_pq + v_p K(x_p, x_q) v_q h^2 at lambda + i0."""
    if not energy > 0.0:
        raise BirmanSchwingerException(
            "M0(lambda + i0) needs lambda > 0; use the zero-energy diagnostic",
            code="ENERGY", context={"lambda": energy},
        )
    if quad.is_empty:
        raise SupportException("M0 needs at least one quadrature node", code="EMPTY_SUPPORT")
    k = float(np.sqrt(energy))
    distances = quad.distances.copy()
    np.fill_diagonal(distances, 1.0)
    kernel = resolvent_kernel(k, distances)
    np.fill_diagonal(kernel, cell_average_kernel(k, quad.grid.spacing))
    matrix = quad.weight * (quad.v[:, None] * kernel * quad.v[None, :])
    matrix[np.diag_indices_from(matrix)] += quad.u
    return BSMatrix(energy=float(energy), matrix=matrix, quad=quad)


def invert_m0(
    m: BSMatrix, tol_sing: float = TOL_SING, residual_tol: float = RESIDUAL_TOL
) -> BSMatrix:
    """Dense inverse with singular-value guard and residual check."""
    singular_values = np.linalg.svd(m.matrix, compute_uv=False)
    sigma_max, sigma_min = float(singular_values[0]), float(singular_values[-1])
    if sigma_min < tol_sing:
        raise BirmanSchwingerException(
            f"M0 near-singular: possible threshold resonance or numerical eigenvalue at "
            f"lambda={m.energy:.4g}",
            code="NEAR_SINGULAR",
            context={"sigma_min": sigma_min, "energy": m.energy, "tol_sing": tol_sing},
        )
    inverse = np.linalg.inv(m.matrix)
    residual = float(np.linalg.norm(m.matrix @ inverse - np.eye(m.size)))
    if residual > residual_tol:
        raise BirmanSchwingerException(
            "Inverse residual above tolerance", code="RESIDUAL",
            context={"residual": residual, "energy": m.energy, "sigma_min": sigma_min},
        )
    logger.debug(f"Inverted M0 at lambda={m.energy:.4g}: cond={sigma_max / sigma_min:.3e}")
    return BSMatrix(
        energy=m.energy,
        matrix=inverse,
        quad=m.quad,
        condition=sigma_max / sigma_min,
        sigma_min=sigma_min,
        inverted=True,
    )


def invert_on_grid(
    quad: SupportQuadrature,
    egrid: EnergyGrid,
    tol_sing: float = TOL_SING,
    threads: Optional[int] = None,
) -> List[BSMatrix]:
    """M0(lambda_i + i0)^-1 for every energy; empty support gives empty matrices."""
    if quad.is_empty:
        return [
            BSMatrix(lam, np.zeros((0, 0), dtype=np.complex128), quad, 1.0, 1.0, True)
            for lam in egrid.energies
        ]
    inverses = parallel_map(lambda lam: invert_m0(assemble_m0(lam, quad), tol_sing),
                            egrid.energies, threads)
    logger.info(f"Inverted M0 on {egrid.count} energies (n_s={quad.size})")
    return inverses


def high_energy_check(
    quad: SupportQuadrature, egrid: EnergyGrid, threads: Optional[int] = None
) -> CheckResult:
    """||M0(lambda + i0)^-1 - u|| over the top decade must decrease towards Lambda_max."""
    top = egrid.energies[egrid.energies >= egrid.lambda_max / 10.0]
    if quad.is_empty:
        defects = np.zeros(top.size)
    else:
        u = np.diag(quad.u)
        defects = np.array(parallel_map(
            lambda lam: float(np.linalg.norm(invert_m0(assemble_m0(lam, quad)).matrix - u, 2)),
            top, threads,
        ))
    decreasing = bool(defects[-1] <= defects[0])
    verdict = Verdict.PASS if decreasing else Verdict.FAIL
    logger.info(f"High-energy M0 check: defect {defects[0]:.3e} -> {defects[-1]:.3e}")
    return CheckResult(
        name="m0_high_energy",
        defect=float(defects[-1]),
        threshold=float(defects[0]),
        verdict=verdict,
        evidence={"energies": top.tolist(), "defects": defects.tolist()},
    )


def sigma_min_at(energy: float, quad: SupportQuadrature) -> Tuple[float, float]:
    """(sigma_min, condition number) of M0(lambda + i0); V = 0 gives (1, 1)."""
    if quad.is_empty:
        return 1.0, 1.0
    singular_values = np.linalg.svd(assemble_m0(energy, quad).matrix, compute_uv=False)
    return float(singular_values[-1]), float(singular_values[0] / singular_values[-1])


def zero_energy_diagnostic(
    quad: SupportQuadrature,
    ladder: Sequence[float],
    resonance_tol: float = 1e-3,
    resonance_drop: float = 10.0,
    floor: float = 1e-6,
    threads: Optional[int] = None,
) -> CheckResult:
    """sigma_min(M0(lambda + i0)) along a decreasing ladder: GENERIC or RESONANT-SUSPECT."""
    energies = np.asarray(ladder, dtype=float)
    if np.any(np.diff(energies) >= 0.0) or energies.min() < floor:
        raise BirmanSchwingerException(
            "Zero-energy ladder must decrease and stay above the grid floor",
            code="LADDER", context={"ladder": energies.tolist(), "floor": floor},
        )
    rows = parallel_map(lambda lam: sigma_min_at(lam, quad), energies, threads)
    sigma = np.array([row[0] for row in rows])
    condition = np.array([row[1] for row in rows])
    drop = float(sigma[0] / sigma[-1])
    suspect = sigma[-1] < resonance_tol or drop > resonance_drop
    verdict = Verdict.RESONANT_SUSPECT if suspect else Verdict.GENERIC
    if suspect:
        logger.warning(
            f"sigma_min falls to {sigma[-1]:.3e} at lambda={energies[-1]:.1e} "
            f"(drop x{drop:.3g}): zero-energy eigenvalue or resonance suspected"
        )
    else:
        logger.info(f"Zero-energy diagnostic GENERIC: sigma_min plateau near {sigma[-1]:.3e}")
    return CheckResult(
        name="zero_energy",
        defect=drop,
        threshold=resonance_drop,
        verdict=verdict,
        evidence={
            "ladder": energies.tolist(),
            "sigma_min": sigma.tolist(),
            "condition": condition.tolist(),
            "resonance_tol": resonance_tol,
        },
        message="eigenvalue and resonance are not distinguished" if suspect else "",
    )


def tune_resonant_coupling(
    potential: Potential,
    grid: Grid2D,
    energy: float,
    bracket: Tuple[float, float],
    v_cut: float = 1e-6,
    cap: int = 4000,
) -> Tuple[float, float]:
    """Coupling in the bracket minimising sigma_min(M0(lambda + i0)); returns (g, sigma_min)."""
    g_low, g_high = bracket
    if not 0.0 < g_low < g_high:
        raise BirmanSchwingerException(
            "Coupling bracket must be positive and ordered", code="BRACKET",
            context={"bracket": bracket},
        )
    # nodes fixed at the strongest coupling, v rescaled by sqrt(g / g_high)
    base = build_support(factorize(sample_potential(potential.with_coupling(g_high), grid)),
                         v_cut, cap)

    def objective(g: float) -> float:
        scaled = replace(base, v=base.v * np.sqrt(g / g_high))
        return sigma_min_at(energy, scaled)[0]

    result = minimize_scalar(objective, bounds=(g_low, g_high), method="bounded",
                             options={"xatol": 1e-6 * g_high})
    logger.info(
        f"Resonant coupling search on {potential.tag}: g={result.x:.6g}, "
        f"sigma_min={result.fun:.3e} at lambda={energy:.1e}"
    )
    return float(result.x), float(result.fun)
