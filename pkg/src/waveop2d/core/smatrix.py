"""
Fiber scattering matrices S(lambda) = 1 - 2 pi i F0(lambda) v M0(lambda + i0)^-1 v F0(lambda)^*
and the operator B (B phi)(lambda) = v M0^-1 v F0(lambda)^* phi(lambda).
"""

from dataclasses import dataclass
from typing import Callable, List, Literal, Optional, Sequence

import numpy as np
from loguru import logger

from waveop2d.concurrency import parallel_map
from waveop2d.core.birman_schwinger import BSMatrix, assemble_m0, invert_m0
from waveop2d.core.free_ops import (
    AngularFunction,
    FiberedFunction,
    circle_directions,
    f0_adjoint_matrix,
    f0_matrix,
)
from waveop2d.core.grid import Grid2D
from waveop2d.core.potential import (
    Potential,
    SupportQuadrature,
    build_support,
    factorize,
    sample_potential,
)
from waveop2d.exceptions import ScatteringMatrixException
from waveop2d.workbench_types import CheckResult, Verdict

TOL_UNIT = 1e-3
MAX_PHASE_STEP = 0.9 * np.pi


@dataclass(frozen=True, eq=False)
class FiberOperator:
    """N_omega x N_omega matrix acting on one energy fiber"""
    energy: float
    matrix: np.ndarray
    unitarity_defect: Optional[float] = None

    @property
    def n_omega(self) -> int:
        return int(self.matrix.shape[0])

    def apply(self, g: AngularFunction) -> AngularFunction:
        return AngularFunction(self.matrix @ g.values)

    def minus_identity(self) -> np.ndarray:
        return self.matrix - np.eye(self.n_omega)

    def adjoint(self) -> "FiberOperator":
        return FiberOperator(self.energy, self.matrix.conj().T, self.unitarity_defect)


def _inverse_at(inverses: Sequence[BSMatrix], energy: float) -> BSMatrix:
    for inverse in inverses:
        if np.isclose(inverse.energy, energy, rtol=1e-12, atol=0.0):
            return inverse
    raise ScatteringMatrixException(
        "No M0 inverse available at this energy", code="MISSING_INVERSE",
        context={"lambda": float(energy)},
    )


def apply_b(
    phi: FiberedFunction,
    quad: SupportQuadrature,
    inverses: Optional[Sequence[BSMatrix]] = None,
    mode: Literal["exact", "born"] = "exact",
) -> FiberedFunction:
    """B phi as support-indexed fibers; the born mode replaces M0^-1 by u."""
    egrid = phi.egrid
    if quad.is_empty:
        return FiberedFunction(egrid, np.zeros((egrid.count, 0), dtype=np.complex128),
                               quad.weight)
    if mode == "exact" and inverses is None:
        raise ScatteringMatrixException("Exact B needs M0 inverses", code="MISSING_INVERSE")
    n_omega = phi.fiber_dim
    out = np.empty((egrid.count, quad.size), dtype=np.complex128)
    for i, lam in enumerate(egrid.energies):
        pulled = quad.v * (f0_adjoint_matrix(lam, quad.nodes, n_omega) @ phi.values[i])
        if mode == "born":
            out[i] = quad.v * quad.u * pulled
        else:
            out[i] = quad.v * (_inverse_at(inverses, lam).matrix @ pulled)
    return FiberedFunction(egrid, out, quad.weight)


def build_s(energy: float, quad: SupportQuadrature, inverse: Optional[BSMatrix],
            n_omega: int) -> FiberOperator:
    """S(lambda) with its unitarity defect ||S^* S - 1||."""
    identity = np.eye(n_omega, dtype=np.complex128)
    if quad.is_empty:
        return FiberOperator(float(energy), identity, 0.0)
    if inverse is None or not np.isclose(inverse.energy, energy, rtol=1e-12, atol=0.0):
        raise ScatteringMatrixException(
            "S(lambda) needs the M0 inverse at the same energy", code="MISSING_INVERSE",
            context={"lambda": float(energy)},
        )
    forward = f0_matrix(energy, quad.nodes, quad.weight, n_omega) * quad.v[None, :]
    backward = quad.v[:, None] * f0_adjoint_matrix(energy, quad.nodes, n_omega)
    s = identity - 2j * np.pi * (forward @ (inverse.matrix @ backward))
    defect = float(np.linalg.norm(s.conj().T @ s - identity, 2))
    return FiberOperator(float(energy), s, defect)


def build_s_curve(
    quad: SupportQuadrature,
    inverses: Sequence[BSMatrix],
    n_omega: int,
    threads: Optional[int] = None,
) -> List[FiberOperator]:
    curve = parallel_map(lambda inv: build_s(inv.energy, quad, inv, n_omega), inverses, threads)
    worst = max(op.unitarity_defect for op in curve)
    logger.info(f"Built S(lambda) on {len(curve)} energies, max unitarity defect {worst:.3e}")
    return curve


def born_fiber(energy: float, vhat: Callable[[np.ndarray, np.ndarray], np.ndarray],
               n_omega: int) -> np.ndarray:
    """First-order (S - 1) matrix: (2 pi / N) (-i / 4 pi) V^(sqrt(lambda) (omega_m - omega_m'))."""
    k = np.sqrt(energy)
    directions = circle_directions(n_omega)
    diff = k * (directions[:, None, :] - directions[None, :, :])
    return (2.0 * np.pi / n_omega) * (-0.25j / np.pi) * vhat(diff[..., 0], diff[..., 1])


def apply_fiberwise(ops: Sequence[FiberOperator], phi: FiberedFunction,
                    minus_identity: bool = False, adjoint: bool = False) -> FiberedFunction:
    """(S(lambda) phi(lambda)) per fiber, optionally with S - 1 or S^*."""
    if len(ops) != phi.egrid.count:
        raise ScatteringMatrixException(
            "One fiber operator per energy is required", code="SHAPE",
            context={"operators": len(ops), "N_lambda": phi.egrid.count},
        )
    out = np.empty_like(phi.values)
    for i, op in enumerate(ops):
        matrix = op.matrix.conj().T if adjoint else op.matrix
        out[i] = matrix @ phi.values[i]
        if minus_identity:
            out[i] -= phi.values[i]
    return phi.with_values(out)


def det_phase_curve(ops: Sequence[FiberOperator], tol_unit: float = TOL_UNIT) -> np.ndarray:
    """Unwrapped arg det S(lambda_i) by nearest-neighbour continuation."""
    phases = np.empty(len(ops))
    previous = 0.0
    for i, op in enumerate(ops):
        if op.unitarity_defect is not None and op.unitarity_defect >= 10.0 * tol_unit:
            raise ScatteringMatrixException(
                "S(lambda) too far from unitary to follow its phase", code="UNITARITY",
                context={"lambda": op.energy, "defect": op.unitarity_defect},
            )
        sign, _ = np.linalg.slogdet(op.matrix)
        raw = float(np.angle(sign))
        if i == 0:
            phases[0] = raw
        else:
            step = (raw - previous + np.pi) % (2.0 * np.pi) - np.pi
            if abs(step) > MAX_PHASE_STEP:
                raise ScatteringMatrixException(
                    "Phase jump between neighbouring energies; refine the energy grid",
                    code="PHASE_JUMP",
                    context={"lambda_prev": ops[i - 1].energy, "lambda": op.energy,
                             "step": step},
                )
            phases[i] = phases[i - 1] + step
        previous = raw
    return phases


def smatrix_high_energy(ops: Sequence[FiberOperator]) -> CheckResult:
    """||S(lambda) - 1|| must drop across the top energy decade."""
    energies = np.array([op.energy for op in ops])
    lambda_max = energies[-1]
    decade = int(np.argmin(np.abs(np.log(energies / (lambda_max / 10.0)))))
    top = [float(np.linalg.norm(op.minus_identity(), 2)) for op in ops[decade:]]
    verdict = Verdict.PASS if top[-1] <= top[0] else Verdict.FAIL
    return CheckResult(
        name="smatrix_high_energy",
        defect=top[-1],
        threshold=top[0],
        verdict=verdict,
        evidence={"energies": energies[decade:].tolist(), "norms": top},
    )


def reciprocity_defect(op: FiberOperator) -> float:
    """max over entries of |S(omega, omega') - S(-omega', -omega)|, in spectral norm."""
    n = op.n_omega
    flip = (np.arange(n) + n // 2) % n
    reflected = op.matrix.T[np.ix_(flip, flip)]
    return float(np.linalg.norm(op.matrix - reflected, 2))


def unitarity_check(ops: Sequence[FiberOperator], tol_unit: float = TOL_UNIT) -> CheckResult:
    defects = np.array([op.unitarity_defect for op in ops], dtype=float)
    reciprocity = np.array([reciprocity_defect(op) for op in ops])
    worst = float(defects.max())
    verdict = Verdict.PASS if worst < tol_unit else Verdict.FAIL
    if reciprocity.max() >= 10.0 * tol_unit:
        verdict = Verdict.FAIL
    return CheckResult(
        name="smatrix_unitarity",
        defect=worst,
        threshold=tol_unit,
        verdict=verdict,
        evidence={
            "energies": [op.energy for op in ops],
            "unitarity_defects": defects.tolist(),
            "reciprocity_defects": reciprocity.tolist(),
        },
    )


def born_limit_check(
    potential: Potential,
    grid: Grid2D,
    energies: Sequence[float],
    couplings: Sequence[float] = (1e-3, 1e-2),
    n_omega: int = 64,
    v_cut: float = 1e-6,
    cap: int = 4000,
    stability: float = 2.0,
) -> CheckResult:
    """||S(lambda) - 1 - Born(lambda)|| / g^2 must stay within a factor across weak couplings."""
    residuals = []
    for g in couplings:
        scaled = potential.with_coupling(g)
        quad = build_support(factorize(sample_potential(scaled, grid)), v_cut, cap)
        worst = 0.0
        for lam in energies:
            inverse = None if quad.is_empty else invert_m0(assemble_m0(lam, quad))
            s = build_s(lam, quad, inverse, n_omega)
            born = born_fiber(lam, scaled.fourier_transform, n_omega)
            worst = max(worst, float(np.linalg.norm(s.minus_identity() - born, 2)))
        residuals.append(worst / g ** 2)
        logger.debug(f"Born residual at g={g:g}: {residuals[-1]:.4e} (scaled by g^2)")
    spread = max(residuals) / min(residuals) if min(residuals) > 0.0 else float("inf")
    if max(residuals) == 0.0:
        spread = 1.0
    return CheckResult(
        name="born_limit",
        defect=spread,
        threshold=stability,
        verdict=Verdict.PASS if spread < stability else Verdict.FAIL,
        evidence={"couplings": list(couplings), "energies": [float(e) for e in energies],
                  "scaled_residuals": residuals},
    )
