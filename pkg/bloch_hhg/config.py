# bloch-hhg Configuration

import json
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Literal, Optional

from dotenv import load_dotenv
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator
from slugify import slugify

from bloch_hhg.errors import ConfigError
from bloch_hhg.physics.bloch import PhaseConvention
from bloch_hhg.physics.potential import PotentialKind, PotentialSpec
from bloch_hhg.physics.propagate import EnsembleMode, EnsembleSpec
from bloch_hhg.physics.pulse import PulseSpec
from bloch_hhg.units import to_internal

# Load environment variables
load_dotenv()


def _default_threads() -> int:
    return int(os.getenv("BLOCH_HHG_THREADS", str(os.cpu_count() or 1)))


class Settings(BaseModel):
    """Process-wide defaults taken from the environment."""

    threads: int = Field(default_factory=_default_threads)
    output_dir: str = Field(
        default_factory=lambda: os.getenv("BLOCH_HHG_OUTPUT_DIR", "results")
    )
    debug: bool = Field(
        default_factory=lambda: os.getenv("BLOCH_HHG_DEBUG", "false").lower()
        == "true"
    )


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class PotentialConfig(_Section):
    kind: PotentialKind = PotentialKind.V1
    depth_eV: float = Field(default=25.0, gt=0.0)
    a_nm: float = Field(default=0.5, gt=0.0)
    # V1 well centres as fractions of a
    centers: tuple[float, float] = (-0.2, 0.107)
    width_cells: float = Field(default=15.0, gt=0.0)
    # V2 offset, Bohr
    x0: float = 0.2475
    calibrate: bool = False
    target_gap_eV: float = Field(default=3.2, gt=0.0)

    @model_validator(mode="after")
    def _centers_inside_cell(self) -> "PotentialConfig":
        if self.kind == PotentialKind.V1:
            for c in self.centers:
                if not -0.5 < c < 0.5:
                    raise ValueError(
                        f"centers: V1 centre {c} (fraction of a) lies outside "
                        f"(-0.5, 0.5)"
                    )
        return self

    def to_spec(self) -> PotentialSpec:
        return PotentialSpec(
            kind=self.kind,
            depth=to_internal(self.depth_eV, "eV"),
            a=to_internal(self.a_nm, "nm"),
            centers=self.centers,
            width_cells=self.width_cells,
            x0=self.x0,
        )

    @property
    def target_gap(self) -> float:
        return to_internal(self.target_gap_eV, "eV")


class GridConfig(_Section):
    # plane waves / real-space samples per cell
    n_points: int = Field(default=256, ge=8)
    # k-points including both zone edges
    n_k: int = Field(default=201, ge=8)
    n_bands: int = Field(default=8, ge=2)
    # 1-based
    valence_band: int = Field(default=1, ge=1)


class PulseConfig(_Section):
    wavelength_um: float = Field(default=3.0, gt=0.0)
    duration_fs: float = Field(default=300.0, gt=0.0)
    peak_field_GVm: float = Field(default=1.0, ge=0.0)
    # atomic units; F0/omega when unset
    a0_override: Optional[float] = None

    def to_spec(self) -> PulseSpec:
        return PulseSpec.from_lab(
            wavelength_um=self.wavelength_um,
            duration_fs=self.duration_fs,
            peak_field_GVm=self.peak_field_GVm,
            a0_override=self.a0_override,
        )


class RunSection(_Section):
    ensemble: EnsembleMode = EnsembleMode.SINGLE_K
    n_steps_per_cycle: int = Field(default=2048, ge=16)
    threads: int = Field(default_factory=_default_threads, ge=1)
    output_dir: str = Field(
        default_factory=lambda: os.getenv("BLOCH_HHG_OUTPUT_DIR", "results")
    )
    # reserved, the physics is deterministic
    seed: int = 0
    include_a_squared: bool = True
    phase_convention: PhaseConvention = PhaseConvention.LARGEST_FOURIER
    block_size: int = Field(default=32, ge=1)
    scan_samples_per_cycle: int = Field(default=256, ge=64)
    check_convergence: bool = False


class OutputConfig(_Section):
    bands: bool = True
    matels: bool = True
    currents: bool = True
    spectrum: bool = True
    gauge_report: bool = True
    svg: bool = False
    run_name: Optional[str] = None
    spectrum_gauge: Literal["velocity", "length"] = "velocity"
    window: str = "hann"


class ChecksConfig(_Section):
    """Thresholds that decide the exit status of a run."""

    delta_J_max: float = Field(default=5e-2, gt=0.0)
    split_ratio_min: float = Field(default=10.0, ge=0.0)
    norm_drift_max: float = Field(default=1e-8, gt=0.0)
    hermiticity_max: float = Field(default=1e-10, gt=0.0)
    identity_max: float = Field(default=1e-10, gt=0.0)
    gap_tolerance_eV: float = Field(default=1e-3, gt=0.0)
    parseval_max: float = Field(default=1e-8, gt=0.0)
    richardson_min: float = 12.0
    richardson_max: float = 20.0


class RunConfig(_Section):
    potential: PotentialConfig = Field(default_factory=PotentialConfig)
    grid: GridConfig = Field(default_factory=GridConfig)
    pulse: PulseConfig = Field(default_factory=PulseConfig)
    run: RunSection = Field(default_factory=RunSection)
    output: OutputConfig = Field(default_factory=OutputConfig)
    checks: ChecksConfig = Field(default_factory=ChecksConfig)

    @model_validator(mode="after")
    def _cross_checks(self) -> "RunConfig":
        g = self.grid
        if g.n_bands > g.n_points:
            raise ValueError(
                f"grid.n_bands ({g.n_bands}) must not exceed grid.n_points "
                f"({g.n_points})"
            )
        if g.valence_band >= g.n_bands:
            raise ValueError(
                f"grid.valence_band ({g.valence_band}) needs a band above it "
                f"(n_bands={g.n_bands})"
            )
        if self.run.ensemble == EnsembleMode.SINGLE_K and g.n_k % 2 == 0:
            raise ValueError(
                f"run.ensemble single_k needs odd grid.n_k so k = 0 is a grid "
                f"point, got {g.n_k}"
            )
        return self

    def ensemble(self) -> EnsembleSpec:
        return EnsembleSpec(mode=self.run.ensemble, n0=self.grid.valence_band)

    @property
    def output_path(self) -> Path:
        base = Path(self.run.output_dir)
        if self.output.run_name:
            return base / slugify(self.output.run_name)
        return base


# Global settings instance
settings = Settings()


def _format_validation(error: ValidationError) -> str:
    parts = []
    for item in error.errors():
        location = ".".join(str(p) for p in item["loc"]) or "<root>"
        parts.append(f"{location}: {item['msg']}")
    return "; ".join(parts)


def build_config(data: dict[str, Any]) -> RunConfig:
    """Validate a nested mapping into a RunConfig."""
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(f"invalid configuration: {_format_validation(e)}") from e


def parse_config(path: str | Path) -> RunConfig:
    """Read a TOML (or JSON) config file; missing keys take their defaults."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e

    if path.suffix.lower() == ".json":
        try:
            data = json.loads(text) if text.strip() else {}
        except json.JSONDecodeError as e:
            raise ConfigError(
                f"{path}: JSON parse error at line {e.lineno}, column {e.colno}: "
                f"{e.msg}"
            ) from e
    else:
        try:
            data = tomllib.loads(text)
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"{path}: TOML parse error: {e}") from e

    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a table of sections")
    return build_config(data)


def serialize_config(config: RunConfig) -> str:
    """JSON form that parse_config reads back to an equal RunConfig."""
    return config.model_dump_json(indent=2)


def ensure_directories(config: RunConfig) -> Path:
    """Create the output directory of a run and return it."""
    path = config.output_path
    path.mkdir(parents=True, exist_ok=True)
    return path
