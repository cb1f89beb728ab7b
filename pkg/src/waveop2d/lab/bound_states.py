"""
Bound states of H = -Delta + V: lattice eigensolver and the radial shooting oracle.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from loguru import logger
from scipy.integrate import solve_ivp
from scipy.optimize import brentq
from scipy.sparse.linalg import ArpackNoConvergence, LinearOperator, eigsh
from scipy.special import kve

from waveop2d.core.grid import Field2D, inner_product
from waveop2d.core.potential import Potential
from waveop2d.exceptions import SpectralException
from waveop2d.workbench_types import CheckResult, Verdict

ENERGY_FLOOR = 1e-6
RESIDUAL_TOL = 1e-6


@dataclass
class BoundStateSet:
    """Negative eigenvalues (sorted) with unit-norm eigenfields and residuals"""
    energies: np.ndarray
    fields: List[Field2D] = field(default_factory=list)
    residuals: List[float] = field(default_factory=list)

    @property
    def count(self) -> int:
        return int(len(self.energies))

    def orthonormality_defect(self) -> float:
        worst = 0.0
        for i, a in enumerate(self.fields):
            for j, b in enumerate(self.fields[i:], start=i):
                target = 1.0 if i == j else 0.0
                worst = max(worst, abs(inner_product(a, b) - target))
        return worst

    def __str__(self) -> str:
        listed = ", ".join(f"{e:.6g}" for e in self.energies)
        return f"BoundStateSet(N_b={self.count}: [{listed}])"


def hamiltonian_operator(v_field: Field2D) -> LinearOperator:
    """-Delta (spectral) + V as a real symmetric operator on flattened grid values."""
    grid = v_field.grid
    n = grid.n
    symbol = grid.momentum_squared
    potential = v_field.values.real

    def matvec(x: np.ndarray) -> np.ndarray:
        psi = np.asarray(x, dtype=float).reshape(n, n)
        kinetic = np.fft.ifft2(symbol * np.fft.fft2(psi)).real
        return (kinetic + potential * psi).ravel()

    return LinearOperator((n * n, n * n), matvec=matvec, rmatvec=matvec, dtype=float)


def bound_states(
    v_field: Field2D,
    k_max: int = 8,
    energy_floor: float = ENERGY_FLOOR,
    residual_tol: float = RESIDUAL_TOL,
) -> BoundStateSet:
    """Lowest eigenpairs of the discrete H below -energy_floor."""
    grid = v_field.grid
    depth = float(np.abs(v_field.values.real).max())
    if grid.cell_area * depth >= 0.5:
        raise SpectralException(
            "Grid does not resolve the well", code="RESOLUTION",
            context={"h2_max_V": grid.cell_area * depth},
        )
    if depth == 0.0:
        return BoundStateSet(np.zeros(0))
    operator = hamiltonian_operator(v_field)
    limit = grid.n * grid.n // 4
    k = min(k_max, limit)
    while True:
        try:
            values, vectors = eigsh(operator, k=k, which="SA", tol=1e-12, maxiter=20000,
                                    v0=np.ones(grid.n * grid.n))
        except ArpackNoConvergence as e:
            raise SpectralException(
                "Eigensolver did not converge", code="NO_CONVERGENCE",
                context={"k": k, "converged": len(e.eigenvalues)},
            )
        order = np.argsort(values)
        values, vectors = values[order], vectors[:, order]
        below = values < -energy_floor
        if below.all() and k < limit:
            k = min(2 * k, limit)
            logger.debug(f"All {len(values)} eigenvalues bound; widening search to k={k}")
            continue
        break

    energies = values[below]
    fields, residuals = [], []
    for e, vec in zip(energies, vectors[:, below].T):
        residual = np.linalg.norm(operator.matvec(vec) - e * vec) / np.linalg.norm(vec)
        if residual > residual_tol * max(1.0, abs(e)):
            raise SpectralException(
                "Eigenpair residual above tolerance", code="RESIDUAL",
                context={"energy": float(e), "residual": float(residual)},
            )
        fields.append(Field2D(grid, vec.reshape(grid.n, grid.n) / grid.spacing))
        residuals.append(float(residual))
    result = BoundStateSet(energies, fields, residuals)
    logger.info(f"Lattice eigensolver: {result}")
    return result


@dataclass(frozen=True)
class RadialLevel:
    ell: int
    energy: float
    nodes: int

    @property
    def degeneracy(self) -> int:
        return 1 if self.ell == 0 else 2


@dataclass
class RadialSpectrum:
    """Bound levels per angular-momentum channel"""
    levels: List[RadialLevel] = field(default_factory=list)

    @property
    def count(self) -> int:
        return sum(level.degeneracy for level in self.levels)

    def energies_2d(self) -> np.ndarray:
        """Energies with angular degeneracy expanded, ascending"""
        expanded = [level.energy for level in self.levels for _ in range(level.degeneracy)]
        return np.sort(np.asarray(expanded, dtype=float))


def _matching_radius(potential: Potential, r_cap: float = 200.0) -> float:
    radii = np.geomspace(0.05, r_cap, 4000)
    values = np.abs(potential.radial(radii))
    peak = values.max()
    if peak == 0.0:
        return 1.0
    outside = np.flatnonzero(values <= 1e-12 * peak)
    outside = outside[radii[outside] > radii[np.argmax(values)]]
    return float(radii[outside[0]]) if outside.size else r_cap


def _shoot(potential: Potential, ell: int, energy: float, r_match: float, dense: bool = False):
    v0 = float(potential.radial(np.array([0.0]))[0])
    r0 = 1e-4
    c = (v0 - energy) / (4.0 * (ell + 1))
    radial = r0 ** ell * (1.0 + c * r0 ** 2)
    d_radial = ell * r0 ** max(ell - 1, 0) * (1.0 + c * r0 ** 2) + 2.0 * c * r0 ** (ell + 1)
    u0 = np.sqrt(r0) * radial
    du0 = 0.5 * radial / np.sqrt(r0) + np.sqrt(r0) * d_radial
    centrifugal = ell ** 2 - 0.25

    def rhs(r, y):
        return [y[1], (centrifugal / r ** 2 + potential.radial(np.array([r]))[0] - energy) * y[0]]

    solution = solve_ivp(rhs, (r0, r_match), [u0, du0], method="DOP853", rtol=1e-10,
                         atol=1e-14, dense_output=dense)
    if not solution.success:
        raise SpectralException("Radial integration failed", code="SHOOTING",
                                context={"ell": ell, "energy": energy})
    return solution


def _mismatch(potential: Potential, ell: int, energy: float, r_match: float) -> float:
    """Normalised Wronskian of the regular solution against sqrt(r) K_ell(kappa r)."""
    solution = _shoot(potential, ell, energy, r_match)
    u, du = solution.y[0, -1], solution.y[1, -1]
    kappa = np.sqrt(-energy)
    x = kappa * r_match
    k_ell = kve(ell, x)
    dk_ell = -0.5 * (kve(abs(ell - 1), x) + kve(ell + 1, x))
    y = np.sqrt(r_match) * k_ell
    dy = 0.5 * k_ell / np.sqrt(r_match) + np.sqrt(r_match) * kappa * dk_ell
    return float((u * dy - du * y) / (np.hypot(u, du) * np.hypot(y, dy)))


def _count_nodes(potential: Potential, ell: int, energy: float, r_match: float) -> int:
    solution = _shoot(potential, ell, energy, r_match, dense=True)
    r = np.linspace(solution.t[0], r_match, 20000)
    u = solution.sol(r)[0]
    return int(np.count_nonzero(np.sign(u[1:]) * np.sign(u[:-1]) < 0))


def radial_shooting_oracle(
    potential: Potential,
    ell_max: int = 3,
    epsilon_min: float = 1e-9,
    n_scan: int = 400,
) -> RadialSpectrum:
    """Bound levels of a radial potential by shooting per channel ell <= ell_max."""
    if not potential.is_radial:
        raise SpectralException(f"{potential} is not radial", code="NOT_RADIAL")
    radii = np.linspace(0.0, 50.0, 20001)
    depth = float(-np.min(potential.radial(radii)))
    spectrum = RadialSpectrum()
    if depth <= 0.0:
        return spectrum
    r_match = _matching_radius(potential)
    epsilons = np.geomspace(epsilon_min, depth, n_scan)
    for ell in range(ell_max + 1):
        values = np.array([_mismatch(potential, ell, -eps, r_match) for eps in epsilons])
        roots = []
        for i in np.flatnonzero(np.sign(values[1:]) * np.sign(values[:-1]) < 0):
            try:
                eps = brentq(lambda e: _mismatch(potential, ell, -e, r_match),
                             epsilons[i], epsilons[i + 1], xtol=1e-14, rtol=1e-12)
            except ValueError as e:
                raise SpectralException(f"Bracket failure in channel {ell}: {e}",
                                        code="BRACKET", context={"ell": ell})
            roots.append(-eps)
        for n, energy in enumerate(sorted(roots)):
            nodes = _count_nodes(potential, ell, energy, r_match)
            if nodes != n:
                raise SpectralException(
                    "Node count inconsistent with level ordering", code="NODES",
                    context={"ell": ell, "level": n, "nodes": nodes, "energy": energy},
                )
            spectrum.levels.append(RadialLevel(ell, float(energy), nodes))
    logger.info(f"Radial oracle for {potential}: N_b={spectrum.count}")
    return spectrum


def tune_bound_state_count(
    potential: Potential,
    target: int,
    bracket: Tuple[float, float],
    ell_max: int = 2,
    n_scan: int = 150,
    rtol: float = 1e-2,
) -> Tuple[float, float]:
    """Coupling window (g_in, g_out) in which the radial oracle counts exactly target states.

    The count is monotone in the coupling of an attractive shape; both edges are bisected in
    log g. An empty window (the count jumps past target) raises NO_WINDOW.
    """
    g_low, g_high = bracket
    if not 0.0 < g_low < g_high:
        raise SpectralException("Coupling bracket must be positive and ordered",
                                code="BRACKET", context={"bracket": bracket})

    def count(g: float) -> int:
        return radial_shooting_oracle(potential.with_coupling(g), ell_max,
                                      n_scan=n_scan).count

    low_count = count(g_low)
    high_count = count(g_high)
    if not low_count < target < high_count:
        raise SpectralException(
            f"Bracket does not straddle {target} bound states", code="BRACKET",
            context={"bracket": bracket, "counts": [low_count, high_count]},
        )

    def edge(below: float, above: float, reached) -> float:
        while above / below > 1.0 + rtol:
            middle = np.sqrt(below * above)
            if reached(count(middle)):
                above = middle
            else:
                below = middle
        return above

    g_in = edge(g_low, g_high, lambda n: n >= target)
    entry_count = count(g_in)
    if entry_count > target:
        raise SpectralException(
            f"No coupling binds exactly {target} states", code="NO_WINDOW",
            context={"threshold": g_in, "count_above": entry_count},
        )
    g_out = edge(g_in, g_high, lambda n: n > target)
    logger.info(f"{potential.tag}: {target} bound states for g in [{g_in:.4g}, {g_out:.4g})")
    return g_in, g_out


def bound_state_check(lattice: BoundStateSet, oracle: Optional[RadialSpectrum],
                      tolerance: float = 0.01) -> CheckResult:
    """Lattice count against the oracle, energies within a relative tolerance."""
    evidence = {"lattice_energies": lattice.energies.tolist(), "lattice_count": lattice.count,
                "residuals": lattice.residuals,
                "orthonormality_defect": lattice.orthonormality_defect()}
    if np.any(lattice.energies >= 0.0):
        return CheckResult("bound_states", float("inf"), tolerance, Verdict.FAIL, evidence,
                           "non-negative eigenvalue reported")
    if oracle is None:
        return CheckResult("bound_states", 0.0, tolerance, Verdict.WARN, evidence,
                           "no radial oracle for this potential")
    reference = oracle.energies_2d()
    evidence.update({"oracle_energies": reference.tolist(), "oracle_count": oracle.count})
    if reference.size != lattice.count:
        return CheckResult("bound_states", float("inf"), tolerance, Verdict.FAIL, evidence,
                           "bound-state count differs from the oracle")
    if reference.size == 0:
        return CheckResult("bound_states", 0.0, tolerance, Verdict.PASS, evidence)
    defect = float(np.max(np.abs(lattice.energies - reference) / np.abs(reference)))
    return CheckResult("bound_states", defect, tolerance,
                       Verdict.PASS if defect < tolerance else Verdict.FAIL, evidence)
