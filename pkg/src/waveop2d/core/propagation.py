"""
Split-step propagators for e^{-itH0} and e^{-itH}, and the time-domain wave operators
W+- = s-lim e^{itH} e^{-itH0} as t -> +-infinity along a geometric time ladder.
"""

from dataclasses import dataclass, field
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from loguru import logger

from waveop2d.core.grid import Field2D, inner_product, low_energy_fraction, packet_moments
from waveop2d.exceptions import PropagationException
from waveop2d.workbench_types import CheckResult, Verdict

EXCURSION_FRACTION = 0.8
STEP_LIMIT = 0.5
TOL_W = 1e-3
LOW_ENERGY_TAIL = 1e-6

Sign = Literal["-", "+"]


def check_excursion(f: Field2D, t: float) -> None:
    """Ballistic estimate |x0| + 2|q0||t| + 4 w(t) must stay inside 0.8 L_box."""
    moments = packet_moments(f)
    w = moments.width
    if w == 0.0:
        return
    reach = (
        float(np.hypot(*moments.center))
        + 2.0 * float(np.hypot(*moments.momentum)) * abs(t)
        + 4.0 * w * np.sqrt(1.0 + 4.0 * t ** 2 / w ** 4)
    )
    limit = EXCURSION_FRACTION * f.grid.half_width
    if reach >= limit:
        raise PropagationException(
            "Packet would leave the box during propagation", code="BOX_EXCURSION",
            context={"t": t, "reach": reach, "limit": limit},
        )


def _kinetic_phase(f: Field2D, t: float) -> np.ndarray:
    return np.exp(-1j * t * f.grid.momentum_squared)


def free_evolve(f: Field2D, t: float, check: bool = True) -> Field2D:
    """e^{-it H0} f, exact in Fourier space."""
    if t == 0.0:
        return f
    if check:
        check_excursion(f, t)
    values = np.fft.ifft2(_kinetic_phase(f, t) * np.fft.fft2(f.values))
    return f.with_values(values)


def check_step(v_field: Field2D, dt: float) -> None:
    grid = v_field.grid
    stiffness = abs(dt) * (2.0 * grid.nyquist ** 2 + float(np.abs(v_field.values).max()))
    if stiffness >= STEP_LIMIT:
        raise PropagationException(
            "Time step does not resolve the kinetic and potential scales", code="STEP_SIZE",
            context={"dt": dt, "stiffness": stiffness, "limit": STEP_LIMIT},
        )


def evolve_h(f: Field2D, t: float, dt: float, v_field: Field2D, check: bool = True) -> Field2D:
    """e^{-it H} f by Strang splitting (half potential, kinetic, half potential)."""
    if t == 0.0:
        return f
    if check:
        check_excursion(f, t)
    steps = max(1, int(np.ceil(abs(t) / dt - 1e-12)))
    h_step = t / steps
    check_step(v_field, h_step)
    potential = v_field.values.real
    half = np.exp(-0.5j * h_step * potential)
    full = half * half
    kinetic = _kinetic_phase(f, h_step)

    psi = half * f.values
    for step in range(steps):
        psi = np.fft.ifft2(kinetic * np.fft.fft2(psi))
        psi = (full if step < steps - 1 else half) * psi
    out = f.with_values(psi)
    drift = abs(out.norm() - f.norm())
    if drift > 1e-8 * steps * max(f.norm(), 1.0):
        logger.warning(f"Norm drift {drift:.3e} over {steps} split steps")
    return out


@dataclass
class WaveOperatorRecord:
    """Cauchy increments of Omega(T) along a time ladder"""
    sign: str
    times: List[float]
    increments: List[float] = field(default_factory=list)
    norms: List[float] = field(default_factory=list)
    tolerance: float = TOL_W

    @property
    def converged(self) -> bool:
        return bool(self.increments) and self.increments[-1] < self.tolerance

    def to_dict(self) -> dict:
        return {
            "sign": self.sign,
            "times": self.times,
            "increments": self.increments,
            "norms": self.norms,
            "tolerance": self.tolerance,
            "converged": self.converged,
        }

    def __str__(self) -> str:
        last = f"{self.increments[-1]:.3e}" if self.increments else "n/a"
        return f"WaveOperatorRecord(W{self.sign}, T_max={self.times[-1]:g}, last increment={last})"


def check_ladder(times: Sequence[float]) -> None:
    times = np.asarray(times, dtype=float)
    if times.size < 2 or np.any(times <= 0.0):
        raise PropagationException("Time ladder needs at least two positive times",
                                   code="LADDER", context={"times": times.tolist()})
    ratios = times[1:] / times[:-1]
    if not np.allclose(ratios, ratios[0]) or ratios[0] <= 1.0:
        raise PropagationException("Time ladder must be geometric and increasing",
                                   code="LADDER", context={"times": times.tolist()})


def wave_operator_time(
    f: Field2D,
    sign: Sign,
    t_ladder: Sequence[float],
    dt: float,
    v_field: Field2D,
    tol_w: float = TOL_W,
    energy_cut: float = 0.25,
    strict: bool = True,
) -> Tuple[Field2D, WaveOperatorRecord]:
    """Omega(T) f = e^{-+iTH} e^{+-iTH0} f along the ladder; returns the last iterate."""
    if sign not in ("-", "+"):
        raise PropagationException(f"Unknown wave-operator sign {sign!r}", code="SIGN")
    check_ladder(t_ladder)
    tail = low_energy_fraction(f, energy_cut)
    if tail > LOW_ENERGY_TAIL:
        raise PropagationException(
            "Packet carries too much mass near zero energy for the time limit",
            code="LOW_ENERGY", context={"fraction": tail, "energy_cut": energy_cut},
        )
    # excursion of the longest free leg, checked before any work
    check_excursion(f, max(t_ladder))

    direction = -1.0 if sign == "-" else 1.0
    record = WaveOperatorRecord(sign=sign, times=[float(t) for t in t_ladder], tolerance=tol_w)
    previous: Optional[Field2D] = None
    for t in t_ladder:
        free = free_evolve(f, direction * t, check=False)
        omega = evolve_h(free, -direction * t, dt, v_field, check=False)
        record.norms.append(omega.norm())
        if previous is not None:
            record.increments.append((omega - previous).norm())
        previous = omega
        logger.debug(f"W{sign}: T={t:g}, norm={record.norms[-1]:.10f}")

    if not record.converged:
        logger.warning(f"{record} did not converge")
        if strict:
            raise PropagationException(
                "Wave-operator ladder is not Cauchy; use a larger box or a higher-energy packet",
                code="NON_CAUCHY", context={"increments": record.increments, "tol_w": tol_w},
            )
    return previous, record


def scattering_via_time(
    f: Field2D, g: Field2D, t_ladder: Sequence[float], dt: float, v_field: Field2D,
    tol_w: float = TOL_W,
) -> complex:
    """<W+ g, W- f>, the time-domain matrix element of S."""
    w_minus, _ = wave_operator_time(f, "-", t_ladder, dt, v_field, tol_w)
    w_plus, _ = wave_operator_time(g, "+", t_ladder, dt, v_field, tol_w)
    return inner_product(w_plus, w_minus)


def intertwining_probe(
    f: Field2D, tau: float, t_ladder: Sequence[float], dt: float, v_field: Field2D,
    tol_w: float = TOL_W,
) -> CheckResult:
    """||e^{-i tau H} W- f - W- e^{-i tau H0} f|| for a small tau."""
    w_minus, _ = wave_operator_time(f, "-", t_ladder, dt, v_field, tol_w)
    left = evolve_h(w_minus, tau, dt, v_field)
    right, _ = wave_operator_time(free_evolve(f, tau), "-", t_ladder, dt, v_field, tol_w)
    defect = (left - right).norm()
    threshold = 5.0 * tol_w
    return CheckResult(
        name="intertwining_probe",
        defect=defect,
        threshold=threshold,
        verdict=Verdict.PASS if defect < threshold else Verdict.FAIL,
        evidence={"tau": tau, "t_max": float(max(t_ladder))},
    )
