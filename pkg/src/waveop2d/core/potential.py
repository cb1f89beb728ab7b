"""
Potential catalog, the factorization V = v u v and the support quadrature.
"""

from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable, Dict, Optional

import numpy as np
from loguru import logger

from waveop2d.core.grid import Field2D, Grid2D
from waveop2d.exceptions import PotentialException, SupportException
from waveop2d.workbench_types import CheckResult, Verdict

# decay rate above which the wave-operator formulas are known to hold
DECAY_THRESHOLD = 11.0

Shape = Callable[[np.ndarray, np.ndarray], np.ndarray]


@dataclass(frozen=True)
class Potential:
    """V(x) = coupling * shape(x) with a declared decay exponent"""
    tag: str
    coupling: float
    decay_exponent: float
    shape: Shape
    params: Dict[str, float] = field(default_factory=dict)
    radial_shape: Optional[Callable[[np.ndarray], np.ndarray]] = None
    shape_transform: Optional[Shape] = None

    def __call__(self, x1: np.ndarray, x2: np.ndarray) -> np.ndarray:
        return self.coupling * self.shape(x1, x2)

    @property
    def is_radial(self) -> bool:
        return self.radial_shape is not None

    def radial(self, r: np.ndarray) -> np.ndarray:
        if self.radial_shape is None:
            raise PotentialException(f"Potential {self.tag} is not radial", code="NOT_RADIAL")
        return self.coupling * self.radial_shape(r)

    def fourier_transform(self, xi1: np.ndarray, xi2: np.ndarray) -> np.ndarray:
        """Analytic V^(xi) = \\int e^{-i xi.x} V(x) dx, when the catalog knows it"""
        if self.shape_transform is None:
            raise PotentialException(
                f"No analytic Fourier transform for {self.tag}", code="NO_TRANSFORM"
            )
        return self.coupling * self.shape_transform(xi1, xi2)

    def with_coupling(self, coupling: float) -> "Potential":
        return Potential(
            tag=self.tag,
            coupling=float(coupling),
            decay_exponent=self.decay_exponent,
            shape=self.shape,
            params=dict(self.params),
            radial_shape=self.radial_shape,
            shape_transform=self.shape_transform,
        )

    def __str__(self) -> str:
        return f"Potential({self.tag}, g={self.coupling:g}, sigma={self.decay_exponent:g})"


def _zero(params: Dict[str, float]) -> Dict:
    return dict(
        shape=lambda x1, x2: np.zeros(np.broadcast(x1, x2).shape),
        radial_shape=lambda r: np.zeros_like(r, dtype=float),
        shape_transform=lambda k1, k2: np.zeros(np.broadcast(k1, k2).shape),
    )


def _gaussian_well(params: Dict[str, float]) -> Dict:
    a = params.get("range", 1.0)
    return dict(
        shape=lambda x1, x2: -np.exp(-(x1 ** 2 + x2 ** 2) / a ** 2),
        radial_shape=lambda r: -np.exp(-(r ** 2) / a ** 2),
        shape_transform=lambda k1, k2: -np.pi * a ** 2 * np.exp(-(a ** 2) * (k1 ** 2 + k2 ** 2) / 4.0),
    )


def _anisotropic_gaussian(params: Dict[str, float]) -> Dict:
    a = params.get("range", 1.0)
    s = params.get("aspect", 2.0)
    return dict(
        shape=lambda x1, x2: -np.exp(-(x1 ** 2 + (s * x2) ** 2) / a ** 2),
        shape_transform=lambda k1, k2: -np.pi * a ** 2 / s
        * np.exp(-(a ** 2) * (k1 ** 2 + (k2 / s) ** 2) / 4.0),
    )


def _bump(params: Dict[str, float]) -> Dict:
    radius = params.get("radius", 2.0)

    def profile(r: np.ndarray) -> np.ndarray:
        rho2 = np.asarray(r, dtype=float) ** 2 / radius ** 2
        out = np.zeros_like(rho2)
        inside = rho2 < 1.0
        out[inside] = -np.exp(1.0 - 1.0 / (1.0 - rho2[inside]))
        return out

    return dict(shape=lambda x1, x2: profile(np.hypot(x1, x2)), radial_shape=profile)


def _two_bump(params: Dict[str, float]) -> Dict:
    c1 = (params.get("x1", -1.0), params.get("y1", 0.0))
    c2 = (params.get("x2", 1.2), params.get("y2", 0.6))
    d2 = params.get("depth_ratio", 0.5)
    w2 = params.get("width_ratio", 0.7)

    def shape(x1, x2):
        first = np.exp(-((x1 - c1[0]) ** 2 + (x2 - c1[1]) ** 2))
        second = np.exp(-((x1 - c2[0]) ** 2 + (x2 - c2[1]) ** 2) / w2 ** 2)
        return -(first + d2 * second)

    def transform(k1, k2):
        first = np.pi * np.exp(-(k1 ** 2 + k2 ** 2) / 4.0) * np.exp(-1j * (k1 * c1[0] + k2 * c1[1]))
        second = (np.pi * w2 ** 2 * np.exp(-(w2 ** 2) * (k1 ** 2 + k2 ** 2) / 4.0)
                  * np.exp(-1j * (k1 * c2[0] + k2 * c2[1])))
        return -(first + d2 * second)

    return dict(shape=shape, shape_transform=transform)


def _power_law(params: Dict[str, float]) -> Dict:
    p = params.get("power", 5.0)
    return dict(
        shape=lambda x1, x2: (1.0 + np.hypot(x1, x2)) ** (-p),
        radial_shape=lambda r: (1.0 + np.asarray(r, dtype=float)) ** (-p),
    )


CATALOG: Dict[str, Callable[[Dict[str, float]], Dict]] = {
    "zero": _zero,
    "gaussian_well": _gaussian_well,
    "anisotropic_gaussian": _anisotropic_gaussian,
    "bump": _bump,
    "two_bump": _two_bump,
    "power_law": _power_law,
}


def make_potential(
    tag: str,
    coupling: float = 1.0,
    decay_exponent: float = 12.0,
    params: Optional[Dict[str, float]] = None,
) -> Potential:
    """Build a catalog potential by tag."""
    if tag not in CATALOG:
        raise PotentialException(
            f"Unknown potential tag {tag!r}", code="UNKNOWN_TAG",
            context={"known": sorted(CATALOG)},
        )
    params = dict(params or {})
    return Potential(
        tag=tag, coupling=float(coupling), decay_exponent=float(decay_exponent),
        params=params, **CATALOG[tag](params),
    )


@dataclass(frozen=True, eq=False)
class VUFactorization:
    """v = |V|^{1/2} >= 0 and u = sign(V) with u = +1 on the zero set"""
    v: Field2D
    u: np.ndarray

    def reconstruct(self) -> np.ndarray:
        v = self.v.values.real
        return v * self.u * v


@dataclass(frozen=True, eq=False)
class SupportQuadrature:
    """Grid nodes where v exceeds the cut, in row-major order, with weights h^2"""
    grid: Grid2D
    flat_index: np.ndarray
    nodes: np.ndarray
    v: np.ndarray
    u: np.ndarray

    @property
    def size(self) -> int:
        return int(self.flat_index.size)

    @property
    def is_empty(self) -> bool:
        return self.size == 0

    @property
    def weight(self) -> float:
        return self.grid.cell_area

    @cached_property
    def distances(self) -> np.ndarray:
        diff = self.nodes[:, None, :] - self.nodes[None, :, :]
        return np.hypot(diff[..., 0], diff[..., 1])

    def restrict(self, f: Field2D) -> np.ndarray:
        """Samples of a position field at the quadrature nodes"""
        return f.values.ravel()[self.flat_index]

    @classmethod
    def single_node(cls, grid: Grid2D, flat_index: int = 0, v: float = 0.0,
                    u: float = 1.0) -> "SupportQuadrature":
        """One forced node, used to exercise M0 on an otherwise empty support"""
        index = np.array([flat_index])
        x1, x2 = grid.coordinates
        nodes = np.stack([x1.ravel()[index], x2.ravel()[index]], axis=1)
        return cls(grid, index, nodes, np.array([float(v)]), np.array([float(u)]))

    def __str__(self) -> str:
        return f"SupportQuadrature(n_s={self.size}, h={self.grid.spacing:.4g})"


def sample_potential(p: Potential, grid: Grid2D) -> Field2D:
    """Real field of V values on the grid nodes."""
    x1, x2 = grid.coordinates
    values = np.asarray(p(x1, x2), dtype=float)
    if not np.all(np.isfinite(values)):
        raise PotentialException(
            f"{p} samples to non-finite values", code="NON_FINITE",
            context={"bad_nodes": int(np.count_nonzero(~np.isfinite(values)))},
        )
    return Field2D(grid, values.astype(np.complex128))


def factorize(v_field: Field2D) -> VUFactorization:
    """Split a real field as V = v u v."""
    values = v_field.values
    if np.any(values.imag != 0.0):
        raise PotentialException("Potential field must be real", code="NOT_REAL")
    real = values.real
    v = np.sqrt(np.abs(real))
    u = np.where(real >= 0.0, 1.0, -1.0)
    return VUFactorization(v=v_field.with_values(v), u=u)


def build_support(fact: VUFactorization, v_cut: float, cap: int) -> SupportQuadrature:
    """Collect the nodes with v > v_cut; empty only when V vanishes identically."""
    if not v_cut > 0:
        raise SupportException("v_cut must be positive", code="V_CUT", context={"v_cut": v_cut})
    grid = fact.v.grid
    v = fact.v.values.real.ravel()
    flat_index = np.flatnonzero(v > v_cut)
    if flat_index.size == 0 and np.any(v > 0.0):
        raise SupportException(
            "Support is empty although V is not identically zero",
            code="EMPTY_SUPPORT", context={"v_cut": v_cut, "max_v": float(v.max())},
        )
    if flat_index.size > cap:
        raise SupportException(
            "Support exceeds the dense-solver cap; coarsen the grid or raise v_cut",
            code="CAP_EXCEEDED", context={"n_s": int(flat_index.size), "cap": cap},
        )
    x1, x2 = grid.coordinates
    nodes = np.stack([x1.ravel()[flat_index], x2.ravel()[flat_index]], axis=1)
    quad = SupportQuadrature(grid, flat_index, nodes, v[flat_index], fact.u.ravel()[flat_index])
    logger.debug(f"Built {quad} with v_cut={v_cut:g}")
    return quad


def decay_check(p: Potential, grid: Grid2D, tolerance: float = 0.02) -> CheckResult:
    """Fit max|V| on radial shells to C (1 + r)^-sigma and compare with the declared rate."""
    radius = grid.radius.ravel()
    x1, x2 = grid.coordinates
    values = np.abs(np.asarray(p(x1, x2), dtype=float)).ravel()
    edges = np.linspace(0.0, grid.half_width, 41)
    shell = np.digitize(radius, edges) - 1
    r_fit, v_fit = [], []
    for k in range(len(edges) - 1):
        members = np.flatnonzero(shell == k)
        if members.size == 0:
            continue
        best = members[np.argmax(values[members])]
        if values[best] > 0.0:
            r_fit.append(radius[best])
            v_fit.append(values[best])
    evidence: Dict = {"declared_sigma": p.decay_exponent}
    if values.max() == 0.0:
        sigma_fit = float("inf")
    elif len(r_fit) < 4:
        # shells underflow: decay is faster than anything polynomial
        sigma_fit = float("inf")
    else:
        r_arr = np.asarray(r_fit)
        tail = r_arr >= 0.5 * r_arr.max()
        slope, intercept = np.polyfit(np.log1p(r_arr[tail]), np.log(np.asarray(v_fit)[tail]), 1)
        sigma_fit = float(-slope)
        evidence["constant_fit"] = float(np.exp(intercept))
    evidence["sigma_fit"] = sigma_fit

    if sigma_fit < p.decay_exponent * (1.0 - tolerance):
        verdict = Verdict.FAIL
        message = f"fitted sigma {sigma_fit:.3g} below declared {p.decay_exponent:g}"
    elif p.decay_exponent <= DECAY_THRESHOLD:
        verdict = Verdict.WARN
        message = f"declared sigma {p.decay_exponent:g} below the sigma>11 sufficiency threshold"
    else:
        verdict = Verdict.PASS
        message = "decay verified"
    if verdict is not Verdict.PASS:
        logger.warning(f"Decay check for {p}: {message}")
    return CheckResult(
        name="decay_check",
        defect=max(0.0, p.decay_exponent - sigma_fit) if np.isfinite(sigma_fit) else 0.0,
        threshold=DECAY_THRESHOLD,
        verdict=verdict,
        evidence=evidence,
        message=message,
    )
