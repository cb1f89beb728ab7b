"""
Run configuration: one validated model per experiment file, plus process-level settings.
"""

import hashlib
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

import numpy as np
from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from waveop2d.exceptions import ConfigurationException

NYQUIST_MARGIN = 0.8

CHECK_NAMES = (
    "decay_check",
    "lemma_diagnostics",
    "m0_high_energy",
    "smatrix_unitarity",
    "smatrix_high_energy",
    "born_limit",
    "zero_energy",
    "dilation_convention",
    "wave_operator_crosscheck",
    "intertwining_probe",
    "wave_operator_convergence",
    "remainder_compactness",
    "commutator_compactness",
    "wplus_consistency",
    "bound_states",
    "levinson",
)


def _is_power_of_two(value: int) -> bool:
    return value > 0 and value & (value - 1) == 0


class Section(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GridSection(Section):
    n: int = 256
    half_width: float = Field(24.0, gt=0.0, alias="L_box")

    model_config = ConfigDict(extra="forbid", frozen=True, populate_by_name=True)

    @field_validator("n")
    @classmethod
    def n_power_of_two(cls, v: int) -> int:
        if not _is_power_of_two(v) or v < 8:
            raise ValueError(f"n must be a power of two >= 8, got {v}")
        return v

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.n


class PotentialSection(Section):
    tag: str = "gaussian_well"
    coupling: float = 1.0
    decay_exponent: float = Field(12.0, gt=0.0)
    params: Dict[str, float] = Field(default_factory=dict)
    v_cut: float = Field(1e-3, gt=0.0)
    cap: int = Field(4000, ge=1)


class EnergySection(Section):
    count: int = Field(128, ge=2)
    lambda_max: float = Field(100.0, gt=0.0)
    lambda_min: float = Field(1e-3, gt=0.0)
    spacing: Literal["log", "linear"] = "log"
    n_omega: int = 128
    tol_sing: float = Field(1e-10, gt=0.0)

    @field_validator("n_omega")
    @classmethod
    def n_omega_even(cls, v: int) -> int:
        if v < 16 or v % 2:
            raise ValueError(f"n_omega must be even and >= 16, got {v}")
        return v

    @model_validator(mode="after")
    def ordered_range(self) -> "EnergySection":
        if self.lambda_min >= self.lambda_max:
            raise ValueError("lambda_min must lie below lambda_max")
        return self


class DilationSection(Section):
    margin_decades: float = Field(6.0, ge=2.5)
    window_tol: float = Field(1e-5, gt=0.0)
    n_theta: Optional[int] = None
    n_sigma: Optional[int] = None
    audit_tolerance: float = Field(1e-2, gt=0.0)

    @field_validator("n_theta", "n_sigma")
    @classmethod
    def optional_power_of_two(cls, v: Optional[int]) -> Optional[int]:
        if v is not None and not _is_power_of_two(v):
            raise ValueError(f"polar grid sizes must be powers of two, got {v}")
        return v


class PropagationSection(Section):
    dt: float = Field(5e-4, gt=0.0)
    t_ladder: List[float] = Field(default_factory=lambda: [0.2, 0.4, 0.8])
    tol_w: float = Field(1e-3, gt=0.0)
    energy_cut: float = Field(0.25, gt=0.0)
    tau: float = 0.05

    @field_validator("t_ladder")
    @classmethod
    def geometric_ladder(cls, v: List[float]) -> List[float]:
        times = np.asarray(v, dtype=float)
        if times.size < 2 or np.any(times <= 0.0):
            raise ValueError("t_ladder needs at least two positive times")
        ratios = times[1:] / times[:-1]
        if not np.allclose(ratios, ratios[0]) or ratios[0] <= 1.0:
            raise ValueError("t_ladder must be geometric and increasing")
        return v


class PacketSpec(Section):
    center: Tuple[float, float] = (0.0, 0.0)
    momentum: Tuple[float, float] = (6.0, 0.0)
    width: float = Field(1.5, gt=0.0)


def _default_pairs() -> List[Tuple[PacketSpec, PacketSpec]]:
    return [
        (PacketSpec(), PacketSpec()),
        (PacketSpec(), PacketSpec(center=(0.0, 0.5), momentum=(6.0, 1.0))),
        (PacketSpec(momentum=(6.0, 1.0)), PacketSpec(center=(0.5, 0.0), momentum=(6.0, -1.0))),
    ]


class FamilySection(Section):
    kind: Literal["free_flight", "translated"] = "free_flight"
    times: List[float] = Field(default_factory=lambda: [0.0, 0.6, 1.2, 1.8, 2.4, 3.0])
    radii: List[float] = Field(default_factory=lambda: [2.0, 4.0, 6.0, 8.0, 10.0, 12.0])
    momentum: Tuple[float, float] = (6.0, 0.0)
    width: float = Field(1.0, gt=0.0)
    fine_count: int = Field(2048, ge=2)
    fine_lambda_min: float = Field(4.0, gt=0.0)
    fine_lambda_max: float = Field(90.0, gt=0.0)
    commutator_times: List[float] = Field(default_factory=lambda: [0.0, 1.5, 3.0, 4.5, 6.0, 7.5])
    commutator_center: float = 16.0
    commutator_spread: float = Field(4.0, gt=0.0)

    @field_validator("times", "radii", "commutator_times")
    @classmethod
    def enough_members(cls, v: List[float]) -> List[float]:
        if len(v) < 5:
            raise ValueError("probe families need at least five members")
        return v


class VerifySection(Section):
    checks: List[str] = Field(default_factory=lambda: list(CHECK_NAMES))
    tol_unit: float = Field(1e-3, gt=0.0)
    crosscheck_tolerance: float = Field(0.05, gt=0.0)
    wplus_tolerance: float = Field(1e-2, gt=0.0)
    decay_factor: float = Field(5.0, gt=1.0)
    control_spread: float = Field(2.0, gt=1.0)
    lemma_weight: float = Field(1.5, gt=1.0)
    lemma_low_energy_tolerance: float = Field(0.05, gt=0.0)
    zero_energy_ladder: List[float] = Field(
        default_factory=lambda: [1e-1, 1e-2, 1e-3, 1e-4])
    resonance_tol: float = Field(1e-3, gt=0.0)
    resonance_drop: float = Field(10.0, gt=1.0)
    born_couplings: List[float] = Field(default_factory=lambda: [1e-3, 1e-2])
    born_energies: List[float] = Field(default_factory=lambda: [1.0, 10.0])
    born_v_cut: float = Field(1e-6, gt=0.0)
    k_max: int = Field(8, ge=1)
    ell_max: int = Field(3, ge=0)
    bound_state_tolerance: float = Field(0.01, gt=0.0)
    levinson_rungs: int = Field(8, ge=3)
    levinson_tolerance: float = Field(0.05, gt=0.0)
    probe: PacketSpec = Field(default_factory=PacketSpec)
    pairs: List[Tuple[PacketSpec, PacketSpec]] = Field(default_factory=_default_pairs)
    family: FamilySection = Field(default_factory=FamilySection)

    @field_validator("checks")
    @classmethod
    def known_checks(cls, v: List[str]) -> List[str]:
        unknown = sorted(set(v) - set(CHECK_NAMES))
        if unknown:
            raise ValueError(f"unknown checks {unknown}; known: {list(CHECK_NAMES)}")
        return v

    @field_validator("zero_energy_ladder")
    @classmethod
    def decreasing_ladder(cls, v: List[float]) -> List[float]:
        if len(v) < 2 or any(b >= a for a, b in zip(v, v[1:])):
            raise ValueError("zero_energy_ladder must be strictly decreasing")
        return v


class RunConfig(Section):
    """A complete experiment: every module precondition is checked here before any compute"""
    grid: GridSection = Field(default_factory=GridSection)
    potential: PotentialSection = Field(default_factory=PotentialSection)
    energy: EnergySection = Field(default_factory=EnergySection)
    dilation: DilationSection = Field(default_factory=DilationSection)
    propagation: PropagationSection = Field(default_factory=PropagationSection)
    verify: VerifySection = Field(default_factory=VerifySection)
    cache_dir: Path = Path(".waveop2d_cache")
    output_dir: Path = Path("results")

    @model_validator(mode="after")
    def nyquist_margin(self) -> "RunConfig":
        limit = NYQUIST_MARGIN * np.pi / self.grid.spacing
        if np.sqrt(self.energy.lambda_max) >= limit:
            raise ValueError(
                f"sqrt(lambda_max)={np.sqrt(self.energy.lambda_max):.4g} breaks the Nyquist "
                f"margin {limit:.4g} of h={self.grid.spacing:.4g}"
            )
        family = self.verify.family
        if family.fine_lambda_min < self.energy.lambda_min or \
                family.fine_lambda_max > self.energy.lambda_max:
            raise ValueError("the refined probe range must lie inside the energy range")
        return self

    @classmethod
    def from_file(cls, path: Path | str) -> "RunConfig":
        """Load a TOML or JSON experiment file, chosen by extension."""
        path = Path(path)
        if not path.exists():
            raise ConfigurationException(f"Config file {path} not found", code="NOT_FOUND")
        try:
            if path.suffix == ".toml":
                with path.open("rb") as handle:
                    data = tomllib.load(handle)
            elif path.suffix == ".json":
                data = json.loads(path.read_text())
            else:
                raise ConfigurationException(
                    f"Unsupported config format {path.suffix!r}", code="FORMAT",
                    context={"supported": [".toml", ".json"]},
                )
        except (tomllib.TOMLDecodeError, json.JSONDecodeError) as e:
            raise ConfigurationException(f"Cannot parse {path}: {e}", code="PARSE")
        return cls.model_validate(data)

    def with_overrides(self, **updates: Any) -> "RunConfig":
        """Copy with top-level fields replaced, re-validated."""
        data = self.model_dump()
        data.update({k: v for k, v in updates.items() if v is not None})
        return RunConfig.model_validate(data)

    def section_hash(self, *sections: str, extra: str = "") -> str:
        """SHA-256 over the canonical JSON of the named sections and a version tag"""
        payload = {name: getattr(self, name).model_dump(mode="json") for name in sections}
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":")) + extra
        return hashlib.sha256(blob.encode()).hexdigest()

    def config_hash(self) -> str:
        payload = self.model_dump(mode="json", exclude={"cache_dir", "output_dir"})
        blob = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()


class WorkbenchSettings(BaseSettings):
    """Process-level overrides from WAVEOP2D_* variables or a .env file"""
    cache_dir: Optional[Path] = None
    output_dir: Optional[Path] = None
    threads: int = Field(1, ge=1)
    log_level: str = "INFO"
    log_dir: Path = Path("logs")

    model_config = SettingsConfigDict(env_prefix="WAVEOP2D_", extra="ignore")

    @classmethod
    def from_env(cls, env_file: Optional[Path] = None) -> "WorkbenchSettings":
        """Read settings after loading a .env file into the environment"""
        load_dotenv(env_file)
        return cls()
