"""
Functions of the dilation generators.

On fibered functions, A+ = -i d/ds in s = ln(lambda) after the unitary map
psi(s) = e^{s/2} phi(e^s); on position fields, A = -i d/dsigma in sigma = ln|x| after
g(sigma, theta) = e^sigma f(e^sigma theta). Symbols act by FFT in the log variable.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional, Tuple

import numpy as np
from loguru import logger
from scipy.interpolate import RectBivariateSpline

from waveop2d.core.free_ops import EnergyGrid, FiberedFunction, spectral_transform
from waveop2d.core.grid import Field2D, Grid2D
from waveop2d.exceptions import DilationException

Evaluator = Callable[[np.ndarray], np.ndarray]

WINDOW_TOL = 1e-5
LN10 = np.log(10.0)


@dataclass(frozen=True)
class MellinSymbol:
    """Bounded function nu -> f(nu) of a dilation generator"""
    tag: str
    evaluator: Evaluator
    bound: float
    constant: Optional[complex] = None

    def __call__(self, nu: np.ndarray) -> np.ndarray:
        if self.constant is not None:
            return np.full(np.shape(nu), self.constant, dtype=np.complex128)
        return np.asarray(self.evaluator(np.asarray(nu, dtype=float)), dtype=np.complex128)

    def reflected(self) -> "MellinSymbol":
        """nu -> f(-nu)"""
        return MellinSymbol(f"{self.tag}(-)", lambda nu: self.evaluator(-nu), self.bound,
                            self.constant)

    def __mul__(self, other: "MellinSymbol") -> "MellinSymbol":
        if self.constant is not None and other.constant is not None:
            return constant_symbol(self.constant * other.constant)
        return MellinSymbol(
            f"{self.tag}*{other.tag}",
            lambda nu: self(nu) * other(nu),
            self.bound * other.bound,
        )


def theta_symbol() -> MellinSymbol:
    """theta(nu) = (1 - tanh(pi nu)) / 2"""
    return MellinSymbol("theta", lambda nu: 0.5 * (1.0 - np.tanh(np.pi * nu)), 1.0)


def r_symbol() -> MellinSymbol:
    """R(nu) = (1 + tanh(pi nu / 2)) / 2"""
    return MellinSymbol("R", lambda nu: 0.5 * (1.0 + np.tanh(0.5 * np.pi * nu)), 1.0)


def constant_symbol(value: complex) -> MellinSymbol:
    return MellinSymbol(f"const({value})", lambda nu: np.full(np.shape(nu), value),
                        abs(value), complex(value))


def custom_symbol(tag: str, evaluator: Evaluator, nu_probe: Optional[np.ndarray] = None
                  ) -> MellinSymbol:
    """Wrap an evaluator, certifying boundedness on a wide probe grid."""
    probe = np.linspace(-200.0, 200.0, 40001) if nu_probe is None else nu_probe
    values = np.abs(np.asarray(evaluator(probe)))
    if not np.all(np.isfinite(values)):
        raise DilationException(f"Symbol {tag} is not bounded", code="UNBOUNDED")
    return MellinSymbol(tag, evaluator, float(values.max()))


def dilation_symbol(tau: float) -> MellinSymbol:
    """Symbol e^{i nu tau} of the group element U+_tau"""
    if tau == 0.0:
        return constant_symbol(1.0)
    return MellinSymbol(f"dilate({tau:g})", lambda nu: np.exp(1j * nu * tau), 1.0)


@dataclass(frozen=True)
class LogGrid:
    """Uniform s = ln(lambda) grid whose interior coincides with a log EnergyGrid"""
    s_min: float
    step: float
    count: int
    offset: int
    n_energy: int
    window_decades: float = 0.5

    @property
    def s_values(self) -> np.ndarray:
        return self.s_min + self.step * np.arange(self.count)

    @property
    def interior(self) -> slice:
        return slice(self.offset, self.offset + self.n_energy)

    @property
    def margin(self) -> float:
        """Smallest distance in s between the energy range and the window"""
        low = self.offset * self.step
        high = (self.count - self.offset - self.n_energy) * self.step
        return min(low, high) - self.window_decades * LN10

    @cached_property
    def window(self) -> np.ndarray:
        """Raised-cosine roll-off over the outer window_decades on each side"""
        s = self.s_values
        width = self.window_decades * LN10
        out = np.ones(self.count)
        low = s < s[0] + width
        high = s > s[-1] - width
        out[low] = 0.5 * (1.0 - np.cos(np.pi * (s[low] - s[0]) / width))
        out[high] = 0.5 * (1.0 - np.cos(np.pi * (s[-1] - s[high]) / width))
        return out

    @cached_property
    def frequencies(self) -> np.ndarray:
        return 2.0 * np.pi * np.fft.fftfreq(self.count, d=self.step)


def make_log_grid(egrid: EnergyGrid, margin_decades: float = 6.0,
                  window_decades: float = 0.5) -> LogGrid:
    """Power-of-two log grid with the energy grid embedded index-aligned."""
    if egrid.spacing != "log":
        raise DilationException("Mellin calculus needs a log-spaced energy grid", code="SPACING")
    if margin_decades < 2.0 + window_decades:
        raise DilationException(
            "Log grid needs at least two decades of margin beyond the window",
            code="MARGIN", context={"margin_decades": margin_decades},
        )
    step = egrid.log_step
    pad = int(np.ceil(margin_decades * LN10 / step))
    count = 1 << int(np.ceil(np.log2(egrid.count + 2 * pad)))
    offset = (count - egrid.count) // 2
    s_min = float(np.log(egrid.lambda_min)) - offset * step
    return LogGrid(s_min=s_min, step=step, count=count, offset=offset,
                   n_energy=egrid.count, window_decades=window_decades)


class MellinCalculus:
    """Log-level functional calculus of A+ for fibered functions on one energy grid"""

    def __init__(self, egrid: EnergyGrid, margin_decades: float = 6.0,
                 window_tol: float = WINDOW_TOL, chunk: int = 128):
        self.egrid = egrid
        self.log_grid = make_log_grid(egrid, margin_decades)
        self.window_tol = window_tol
        # fiber columns transformed together
        self.chunk = chunk

    def to_log(self, phi: FiberedFunction) -> np.ndarray:
        """psi(s) = e^{s/2} phi(e^s), extended beyond the energy range and windowed"""
        grid = self.log_grid
        s = grid.s_values
        lam = np.exp(s)
        psi = np.zeros((grid.count, phi.fiber_dim), dtype=np.complex128)
        low, high = grid.offset, grid.offset + grid.n_energy
        psi[low:high] = np.sqrt(self.egrid.energies)[:, None] * phi.values
        psi[:low] = np.sqrt(lam[:low])[:, None] * phi.values[0][None, :]
        tail = self.egrid.lambda_max / lam[high:]
        psi[high:] = (np.sqrt(lam[high:]) * tail)[:, None] * phi.values[-1][None, :]
        return psi * grid.window[:, None]

    def from_log(self, psi: np.ndarray, like: FiberedFunction) -> FiberedFunction:
        interior = psi[self.log_grid.interior]
        return like.with_values(interior / np.sqrt(self.egrid.energies)[:, None])

    def multiply(self, psi: np.ndarray, symbol: MellinSymbol) -> np.ndarray:
        if symbol.constant is not None:
            return symbol.constant * psi
        weights = symbol(self.log_grid.frequencies)
        return np.fft.ifft(weights[:, None] * np.fft.fft(psi, axis=0), axis=0)

    def check_window(self, psi: np.ndarray) -> None:
        grid = self.log_grid
        mass = np.sum(np.abs(psi) ** 2)
        if mass == 0.0:
            return
        edge = grid.window < 1.0
        leak = float(np.sum(np.abs(psi[edge]) ** 2) / mass)
        if leak > self.window_tol:
            raise DilationException(
                "Fiber mass reaches the log-grid window", code="WINDOW_UNDERFLOW",
                context={"leak": leak, "window_tol": self.window_tol},
            )

    def apply(self, phi: FiberedFunction, symbol: MellinSymbol) -> FiberedFunction:
        """(f(A+) x 1) phi"""
        if phi.egrid is not self.egrid and not np.array_equal(phi.egrid.energies,
                                                                self.egrid.energies):
            raise DilationException("Fibered function lives on another energy grid",
                                    code="GRID_MISMATCH")
        if symbol.constant is not None:
            return phi * symbol.constant
        out = np.empty_like(phi.values)
        for start in range(0, phi.fiber_dim, self.chunk):
            block = slice(start, start + self.chunk)
            part = FiberedFunction(phi.egrid, phi.values[:, block], phi.fiber_weight)
            psi = self.to_log(part)
            self.check_window(psi)
            out[:, block] = self.from_log(self.multiply(psi, symbol), part).values
        return phi.with_values(out)

    def dilate(self, phi: FiberedFunction, tau: float) -> FiberedFunction:
        """(U+_tau phi)(lambda) = e^{tau/2} phi(e^tau lambda)"""
        if abs(tau) > self.log_grid.margin:
            raise DilationException(
                "Dilation leaves the log-grid range", code="RANGE",
                context={"tau": tau, "margin": self.log_grid.margin},
            )
        return self.apply(phi, dilation_symbol(tau))


_calculus_cache: dict = {}


def calculus_for(egrid: EnergyGrid, margin_decades: float = 6.0) -> MellinCalculus:
    key = (id(egrid), margin_decades)
    calculus = _calculus_cache.get(key)
    if calculus is None or calculus.egrid is not egrid:
        calculus = MellinCalculus(egrid, margin_decades)
        _calculus_cache[key] = calculus
    return calculus


def dilate(phi: FiberedFunction, tau: float, margin_decades: float = 6.0) -> FiberedFunction:
    if tau == 0.0:
        return phi
    return calculus_for(phi.egrid, margin_decades).dilate(phi, tau)


def apply_symbol_aplus(phi: FiberedFunction, symbol: MellinSymbol,
                       margin_decades: float = 6.0) -> FiberedFunction:
    return calculus_for(phi.egrid, margin_decades).apply(phi, symbol)


@dataclass(frozen=True)
class PolarGrid:
    """Rays theta_j and log-radii sigma_k covering the box with a wide inner margin"""
    n_theta: int
    n_sigma: int
    sigma_min: float
    sigma_max: float

    @property
    def step(self) -> float:
        return (self.sigma_max - self.sigma_min) / self.n_sigma

    @property
    def sigma(self) -> np.ndarray:
        return self.sigma_min + self.step * np.arange(self.n_sigma)

    @property
    def theta(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n_theta) / self.n_theta


def _next_power_of_two(value: float) -> int:
    return 1 << int(np.ceil(np.log2(max(value, 2.0))))


def make_polar_grid(grid: Grid2D, n_theta: Optional[int] = None, n_sigma: Optional[int] = None,
                    inner_decades: float = 6.0, outer_factor: float = 4.0) -> PolarGrid:
    """Log-polar grid; by default rays and log-radii resolve one cell at the box edge."""
    sigma_min = float(np.log(grid.spacing) - inner_decades * LN10)
    sigma_max = float(np.log(outer_factor * grid.half_width))
    if n_sigma is None:
        n_sigma = _next_power_of_two((sigma_max - sigma_min) * grid.half_width / grid.spacing)
    if n_theta is None:
        n_theta = max(64, _next_power_of_two(np.pi * grid.n))
    if n_sigma & (n_sigma - 1):
        raise DilationException("n_sigma must be a power of two", code="FFT_CONTRACT",
                                context={"n_sigma": n_sigma})
    return PolarGrid(int(n_theta), int(n_sigma), sigma_min, sigma_max)


def _spline_pair(grid: Grid2D, values: np.ndarray) -> Tuple[RectBivariateSpline, ...]:
    axis = grid.axis
    return (RectBivariateSpline(axis, axis, values.real),
            RectBivariateSpline(axis, axis, values.imag))


def _to_polar(f: Field2D, polar: PolarGrid) -> np.ndarray:
    grid = f.grid
    if not np.any(f.values):
        return np.zeros((polar.n_sigma, polar.n_theta), dtype=np.complex128)
    r = np.exp(polar.sigma)[:, None]
    x1 = r * np.cos(polar.theta)[None, :]
    x2 = r * np.sin(polar.theta)[None, :]
    inside = (x1 >= grid.axis[0]) & (x1 <= grid.axis[-1]) & (x2 >= grid.axis[0]) & (
        x2 <= grid.axis[-1])
    re, im = _spline_pair(grid, f.values)
    samples = np.zeros(x1.shape, dtype=np.complex128)
    samples[inside] = re.ev(x1[inside], x2[inside]) + 1j * im.ev(x1[inside], x2[inside])
    return r * samples


def _from_polar(g: np.ndarray, polar: PolarGrid, grid: Grid2D) -> Field2D:
    pad = 3
    dtheta = 2.0 * np.pi / polar.n_theta
    theta = dtheta * np.arange(-pad, polar.n_theta + pad)
    periodic = np.concatenate([g[:, -pad:], g, g[:, :pad]], axis=1)
    re = RectBivariateSpline(polar.sigma, theta, periodic.real)
    im = RectBivariateSpline(polar.sigma, theta, periodic.imag)
    x1, x2 = grid.coordinates
    r = grid.radius
    nonzero = r > 0.0
    sigma = np.log(r[nonzero])
    angle = np.mod(np.arctan2(x2[nonzero], x1[nonzero]), 2.0 * np.pi)
    values = np.zeros(r.shape, dtype=np.complex128)
    values[nonzero] = (re.ev(sigma, angle) + 1j * im.ev(sigma, angle)) / r[nonzero]
    # origin cell: angular mean at half a cell
    sigma0 = np.full(polar.n_theta, np.log(0.5 * grid.spacing))
    ring = re.ev(sigma0, polar.theta) + 1j * im.ev(sigma0, polar.theta)
    values[~nonzero] = np.mean(ring) / (0.5 * grid.spacing)
    return Field2D(grid, values)


def apply_symbol_a_position(f: Field2D, symbol: MellinSymbol,
                            polar: Optional[PolarGrid] = None) -> Field2D:
    """f(A) on a position field through log-polar coordinates."""
    if f.space != "position":
        raise DilationException("Dilation calculus acts on position fields", code="SPACE")
    if symbol.constant is not None:
        return f * symbol.constant
    grid = f.grid
    edge = max(np.abs(f.values[0, :]).max(), np.abs(f.values[-1, :]).max(),
               np.abs(f.values[:, 0]).max(), np.abs(f.values[:, -1]).max())
    peak = np.abs(f.values).max()
    if peak > 0.0 and edge > 1e-6 * peak:
        raise DilationException("Field leaks through the box boundary", code="BOUNDARY",
                                context={"edge_ratio": float(edge / peak)})
    polar = polar or make_polar_grid(grid)
    if polar.step * grid.half_width > 2.0 * grid.spacing:
        raise DilationException(
            "Log-radial step too coarse to resolve the box", code="RESOLUTION",
            context={"step": polar.step, "spacing": grid.spacing},
        )
    if polar.sigma_min > np.log(0.5 * grid.spacing) - 2.0 * LN10:
        raise DilationException(
            "Log-radial grid does not reach far enough into the origin cell",
            code="ORIGIN_RESOLUTION", context={"sigma_min": polar.sigma_min},
        )
    g = _to_polar(f, polar)
    nu = 2.0 * np.pi * np.fft.fftfreq(polar.n_sigma, d=polar.step)
    filtered = np.fft.ifft(symbol(nu)[:, None] * np.fft.fft(g, axis=0), axis=0)
    return _from_polar(filtered, polar, grid)


def apply_r_a_position(f: Field2D, polar: Optional[PolarGrid] = None) -> Field2D:
    """R(A) f with R(nu) = (1 + tanh(pi nu / 2)) / 2"""
    return apply_symbol_a_position(f, r_symbol(), polar)


def intertwining_defect(
    f: Field2D, egrid: EnergyGrid, n_omega: int, symbol: MellinSymbol,
    polar: Optional[PolarGrid] = None, margin_decades: float = 6.0,
) -> float:
    """||F0 R(A) f - (symbol(A+) x 1) F0 f|| / ||F0 f||"""
    position_side = spectral_transform(apply_r_a_position(f, polar), egrid, n_omega)
    energy_side = apply_symbol_aplus(spectral_transform(f, egrid, n_omega), symbol,
                                     margin_decades)
    scale = energy_side.norm()
    if scale == 0.0:
        return (position_side - energy_side).norm()
    return (position_side - energy_side).norm() / scale


def audit_dilation_convention(
    f: Field2D, egrid: EnergyGrid, n_omega: int, tolerance: float = 1e-2,
    polar: Optional[PolarGrid] = None,
) -> Tuple[int, float]:
    """Which of theta(A+), theta(-A+) matches R(A); returns (sign, defect)."""
    theta = theta_symbol()
    defects = {
        +1: intertwining_defect(f, egrid, n_omega, theta, polar),
        -1: intertwining_defect(f, egrid, n_omega, theta.reflected(), polar),
    }
    sign = min(defects, key=defects.get)
    logger.info(
        f"Dilation convention audit: defect {defects[1]:.3e} (theta(A+)), "
        f"{defects[-1]:.3e} (theta(-A+))"
    )
    if defects[sign] >= tolerance:
        raise DilationException(
            "Neither sign convention reproduces R(A) in the energy representation",
            code="CONVENTION", context={"defects": {str(k): v for k, v in defects.items()},
                                        "tolerance": tolerance},
        )
    return sign, defects[sign]
