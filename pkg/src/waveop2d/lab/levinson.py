"""
Winding of arg det S(lambda) against the number of bound states.

The raw winding over [lambda_min, Lambda_max] misses two tails: the high-energy phase
tends to -(1/2) \\int V (first-order trace of S - 1), and the s-wave phase approaches
its threshold value only logarithmically. Both are estimated and reported.
"""

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from loguru import logger
from scipy.optimize import OptimizeWarning, curve_fit

from waveop2d.core.free_ops import EnergyGrid
from waveop2d.workbench_types import CheckResult, Verdict

INTEGER_TOL = 0.05


def _wrap(angle: float) -> float:
    return float((angle + np.pi) % (2.0 * np.pi) - np.pi)


def threshold_model(log_energy: np.ndarray, phase0: float, shift: float) -> np.ndarray:
    """Logarithmic s-wave approach Phi0 + 2 arctan(pi / (ln(lambda) + c))"""
    return phase0 + 2.0 * np.arctan(np.pi / (log_energy + shift))


@dataclass
class ThresholdFit:
    phase0: float
    shift: float
    uncertainty: float
    fitted: bool


def fit_threshold_tail(energies: np.ndarray, phases: np.ndarray, rungs: int = 8) -> ThresholdFit:
    """Extrapolate the phase curve to lambda -> 0 from its lowest rungs."""
    log_energy = np.log(energies[:rungs])
    low = phases[:rungs]
    if np.ptp(low) < 1e-12:
        return ThresholdFit(float(low[0]), 0.0, 0.0, False)
    # start the shift so that ln(lambda) + c stays negative on the fitted rungs
    p0 = (float(low[0]), -log_energy[-1] - 5.0)
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("error", OptimizeWarning)
            params, covariance = curve_fit(threshold_model, log_energy, low, p0=p0, maxfev=20000)
    except (RuntimeError, OptimizeWarning, ValueError) as e:
        logger.warning(f"Threshold tail fit failed ({e}); using the lowest rung")
        return ThresholdFit(float(low[0]), 0.0, float(np.ptp(low)), False)
    if np.any(log_energy + params[1] >= 0.0):
        logger.warning("Threshold fit crosses its pole; using the lowest rung")
        return ThresholdFit(float(low[0]), 0.0, float(np.ptp(low)), False)
    return ThresholdFit(float(params[0]), float(params[1]),
                        float(np.sqrt(max(covariance[0, 0], 0.0))), True)


def levinson_check(
    egrid: EnergyGrid,
    phases: Sequence[float],
    bound_count: int,
    potential_integral: float,
    zero_energy: Optional[Verdict] = Verdict.GENERIC,
    rungs: int = 8,
    tolerance: float = INTEGER_TOL,
) -> CheckResult:
    """Corrected winding w + (1/4 pi) \\int V must be an integer of magnitude N_b."""
    phases = np.asarray(phases, dtype=float)
    energies = egrid.energies
    raw = float((phases[-1] - phases[0]) / (2.0 * np.pi))
    tail_high = _wrap(-0.5 * potential_integral - phases[-1])
    fit = fit_threshold_tail(energies, phases, rungs)
    phase_infinity = phases[-1] + tail_high
    winding = float((phase_infinity - fit.phase0) / (2.0 * np.pi))
    corrected = winding + potential_integral / (4.0 * np.pi)
    nearest = int(np.round(corrected))
    distance = abs(corrected - nearest)
    evidence = {
        "winding_raw": raw,
        "winding": winding,
        "winding_corrected": corrected,
        "nearest_integer": nearest,
        "distance": distance,
        "sign": int(np.sign(nearest)),
        "bound_states": bound_count,
        "tail_high": tail_high,
        "threshold_phase": fit.phase0,
        "threshold_shift": fit.shift,
        "threshold_uncertainty": fit.uncertainty / (2.0 * np.pi),
        "threshold_fitted": fit.fitted,
        "potential_integral": potential_integral,
        "lambda_min": float(energies[0]),
        "lambda_max": float(energies[-1]),
    }
    if zero_energy is not None and zero_energy != Verdict.GENERIC:
        logger.warning("Levinson check on a non-generic threshold; verdict withheld")
        return CheckResult("levinson", distance, tolerance, Verdict.RESONANT_SUSPECT, evidence,
                           "zero-energy diagnostic is not GENERIC")
    passed = distance < tolerance and abs(nearest) == bound_count
    logger.info(
        f"Levinson: raw winding {raw:+.4f}, corrected {corrected:+.4f} "
        f"(nearest {nearest:+d}), N_b={bound_count}"
    )
    message = "" if passed else "winding does not match the bound-state count"
    return CheckResult("levinson", distance, tolerance,
                       Verdict.PASS if passed else Verdict.FAIL, evidence, message)
