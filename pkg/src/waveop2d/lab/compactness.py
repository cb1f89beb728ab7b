"""
Compactness probes: norm decay of an operator on near-orthogonal escaping families.
"""

from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence, Tuple, Union

import numpy as np
from loguru import logger

from waveop2d.concurrency import parallel_map
from waveop2d.core.dilation import MellinCalculus, MellinSymbol
from waveop2d.core.free_ops import EnergyGrid, FiberedFunction, apply_n_support
from waveop2d.core.grid import Field2D, WavePacketSpec, inner_product, make_packet
from waveop2d.core.potential import SupportQuadrature
from waveop2d.exceptions import ProbeException
from waveop2d.lab.base import ScatteringContext, decay_ratio, spread_ratio
from waveop2d.lab.wave_operators import FiberImages, remainder_from_images
from waveop2d.workbench_types import CheckResult, Verdict

Member = Union[Field2D, FiberedFunction]

ORTHOGONALITY_TOL = 1e-3
DECAY_FACTOR = 5.0
CONTROL_SPREAD = 2.0
MIN_MEMBERS = 5


def _inner(a: Member, b: Member) -> complex:
    if isinstance(a, Field2D):
        return inner_product(a, b)
    return a.inner(b)


@dataclass
class ProbeFamily:
    """Unit-norm members escaping to infinity, with the labels that generated them"""
    name: str
    members: List[Member]
    labels: List[float]
    images: Optional[List[FiberImages]] = field(default=None, repr=False)

    def gram_offdiagonal(self) -> float:
        """Largest |<phi_n, phi_m>| over n != m"""
        worst = 0.0
        for i, a in enumerate(self.members):
            for b in self.members[i + 1:]:
                worst = max(worst, abs(_inner(a, b)))
        return worst

    def check_orthogonality(self, tolerance: float = ORTHOGONALITY_TOL) -> None:
        worst = self.gram_offdiagonal()
        if worst >= tolerance:
            raise ProbeException(
                f"Family {self.name} is not near-orthogonal", code="NOT_ORTHOGONAL",
                context={"max_overlap": worst, "tolerance": tolerance},
            )


def translated_family(
    ctx: ScatteringContext,
    radii: Sequence[float] = (2.0, 4.0, 6.0, 8.0, 10.0, 12.0),
    direction: Tuple[float, float] = (1.0, 0.0),
    momentum: Tuple[float, float] = (0.0, 4.0),
    width: float = 1.0,
    egrid: Optional[EnergyGrid] = None,
) -> ProbeFamily:
    """F0 of packets centred at r * direction; fiber data oscillate like e^{-i sqrt(lambda) r}."""
    unit = np.asarray(direction, dtype=float) / np.hypot(*direction)
    members = []
    for r in radii:
        packet = make_packet(ctx.grid, WavePacketSpec(center=tuple(r * unit), momentum=momentum,
                                                      width=width))
        members.append(ctx.transform(packet, egrid))
    return ProbeFamily("translated", members, [float(r) for r in radii])


def free_flight_family(
    ctx: ScatteringContext,
    fine: EnergyGrid,
    times: Sequence[float] = (0.0, 0.6, 1.2, 1.8, 2.4, 3.0),
    momentum: Tuple[float, float] = (6.0, 0.0),
    width: float = 1.0,
) -> ProbeFamily:
    """phi_n = e^{-i lambda t_n} F0 phi_0, i.e. F0 of the freely evolved packet."""
    packet = make_packet(ctx.grid, WavePacketSpec(momentum=momentum, width=width))
    base = FiberImages.refined(packet, ctx, fine)
    images = [base.modulated(np.exp(-1j * fine.energies * t)) for t in times]
    return ProbeFamily("free_flight", [image.phi for image in images],
                       [float(t) for t in times], images)


def commutator_family(
    quad: SupportQuadrature,
    egrid: EnergyGrid,
    times: Sequence[float] = (0.0, 1.5, 3.0, 4.5, 6.0, 7.5),
    center: float = 16.0,
    spread: float = 4.0,
    profile: Optional[np.ndarray] = None,
) -> ProbeFamily:
    """xi_n(lambda) = e^{-i lambda t_n} chi(lambda) p on the support quadrature."""
    if quad.is_empty:
        raise ProbeException("Commutator family needs a non-empty support", code="EMPTY_SUPPORT")
    p = quad.v.astype(np.complex128) if profile is None else np.asarray(profile, np.complex128)
    chi = np.exp(-((egrid.energies - center) ** 2) / (2.0 * spread ** 2))
    members = []
    for t in times:
        values = (np.exp(-1j * egrid.energies * t) * chi)[:, None] * p[None, :]
        member = FiberedFunction(egrid, values, quad.weight)
        members.append(member * (1.0 / member.norm()))
    return ProbeFamily("commutator", members, [float(t) for t in times])


def compactness_probe(
    op: Callable[[Member], Member],
    family: ProbeFamily,
    control: Optional[Callable[[Member], Member]] = None,
    decay_factor: float = DECAY_FACTOR,
    control_spread: float = CONTROL_SPREAD,
    name: str = "compactness_probe",
    threads: Optional[int] = None,
) -> CheckResult:
    """r_n = ||op(phi_n)|| must drop by decay_factor while the control stays flat."""
    if len(family.members) < MIN_MEMBERS:
        raise ProbeException("Probe families need at least five members", code="FAMILY_SIZE",
                             context={"members": len(family.members)})
    family.check_orthogonality()
    norms = parallel_map(lambda member: op(member).norm(), family.members, threads)
    decay = decay_ratio(norms)
    evidence = {"family": family.name, "labels": family.labels, "norms": norms,
                "decay_ratio": decay, "max_overlap": family.gram_offdiagonal()}
    vanishing = max(norms) == 0.0
    consistent = vanishing or decay >= decay_factor
    if control is not None:
        control_norms = parallel_map(lambda member: control(member).norm(), family.members,
                                     threads)
        spread = spread_ratio(control_norms)
        evidence.update({"control_norms": control_norms, "control_spread": spread})
        consistent = consistent and spread < control_spread
    verdict = Verdict.COMPACT_CONSISTENT if consistent else Verdict.NOT_CONSISTENT
    logger.info(f"{name} on {family.name}: decay x{decay:.3g} -> {verdict.value}")
    defect = 0.0 if vanishing else 1.0 / decay
    return CheckResult(name=name, defect=defect,
                       threshold=1.0 / decay_factor, verdict=verdict, evidence=evidence)


def remainder_probe(ctx: ScatteringContext, family: ProbeFamily,
                    decay_factor: float = DECAY_FACTOR,
                    control_spread: float = CONTROL_SPREAD) -> CheckResult:
    """Compactness of K on a family, with the fiberwise (S - 1) control."""
    if family.images is not None:
        lookup = {id(image.phi): image for image in family.images}

        def images_of(member: FiberedFunction) -> FiberImages:
            return lookup[id(member)]
    else:
        def images_of(member: FiberedFunction) -> FiberImages:
            return FiberImages.exact(member, ctx)

    return compactness_probe(
        lambda member: remainder_from_images(images_of(member), ctx),
        family,
        control=lambda member: images_of(member).s_image,
        decay_factor=decay_factor,
        control_spread=control_spread,
        name="remainder_compactness",
    )


def commutator_compactness_probe(
    family: ProbeFamily,
    quad: SupportQuadrature,
    calculus: MellinCalculus,
    symbol: MellinSymbol,
    n_omega: int,
    decay_factor: float = DECAY_FACTOR,
    control_spread: float = CONTROL_SPREAD,
) -> CheckResult:
    """D = (f(A+) x 1) N - N (f(A+) x 1) on support-valued fibers; the N control stays flat."""

    def n_op(xi: FiberedFunction) -> FiberedFunction:
        return apply_n_support(xi, quad, n_omega)

    def commutator(xi: FiberedFunction) -> FiberedFunction:
        return calculus.apply(n_op(xi), symbol) - n_op(calculus.apply(xi, symbol))

    return compactness_probe(commutator, family, control=n_op, decay_factor=decay_factor,
                             control_spread=control_spread,
                             name=f"commutator_compactness[{symbol.tag}]")
