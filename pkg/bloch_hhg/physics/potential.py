# bloch-hhg - Model crystal potentials

import logging
from enum import Enum
from typing import Callable, Optional

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator
from scipy.optimize import bisect

from bloch_hhg.errors import CalibrationError, PotentialError
from bloch_hhg.units import from_internal, to_internal

logger = logging.getLogger(__name__)

# relative tail tolerance of the image sum
IMAGE_TAIL_TOLERANCE = 1e-12
MAX_IMAGES = 10_000
DEPTH_SCALE_BRACKET = (0.25, 4.0)


class PotentialKind(str, Enum):
    """Model potentials: two windowed wells, a tanh well, or no potential."""

    V1 = "V1"
    V2 = "V2"
    FREE = "FREE"


class PotentialSpec(BaseModel):
    """Analytic cell potential, all quantities in atomic units."""

    model_config = ConfigDict(frozen=True)

    kind: PotentialKind = PotentialKind.V1
    depth: float = Field(default_factory=lambda: to_internal(25.0, "eV"), gt=0.0)
    a: float = Field(default_factory=lambda: to_internal(0.5, "nm"), gt=0.0)
    # V1 well centres as fractions of a
    centers: tuple[float, float] = (-0.2, 0.107)
    # V1 cos^2 window denominator in units of a ("15 a")
    width_cells: float = Field(default=15.0, gt=0.0)
    # V2 offset in Bohr
    x0: float = 0.2475
    depth_scale: float = Field(default=1.0, gt=0.0)

    @model_validator(mode="after")
    def _centers_inside_cell(self) -> "PotentialSpec":
        if self.kind == PotentialKind.V1:
            for c in self.centers:
                if not -0.5 < c < 0.5:
                    raise ValueError(f"V1 centre {c}a lies outside (-a/2, a/2)")
        return self

    @property
    def width_scale(self) -> float:
        """V1 window denominator as a length."""
        return self.width_cells * self.a

    @property
    def strength(self) -> float:
        """Well depth after calibration scaling."""
        return self.depth * self.depth_scale


class PotentialSamples:
    """Periodized potential on the N-point cell grid x_m = -a/2 + m a/N."""

    def __init__(self, grid: np.ndarray, values: np.ndarray, a: float, images: int):
        self.grid = grid
        self.values = values
        self.a = a
        self.images = images

    @property
    def n_points(self) -> int:
        return len(self.grid)

    @property
    def is_flat(self) -> bool:
        """True when the periodized potential is constant to round-off."""
        scale = max(float(np.max(np.abs(self.values))), 1.0)
        return bool(np.ptp(self.values) < IMAGE_TAIL_TOLERANCE * scale)


def cell_grid(a: float, n_points: int) -> np.ndarray:
    """Equally spaced grid on [-a/2, a/2)."""
    return -0.5 * a + np.arange(n_points) * (a / n_points)


def eval_cell_v1(x: np.ndarray, spec: PotentialSpec) -> np.ndarray:
    """Two cos^2 wells, each zero outside its [-pi/2, pi/2] window."""
    x = np.asarray(x, dtype=float)
    total = np.zeros_like(x)
    for center in spec.centers:
        phase = np.pi * (x - center * spec.a) / spec.width_scale
        inside = np.abs(phase) <= 0.5 * np.pi
        total += np.where(inside, np.cos(phase) ** 2, 0.0)
    return -spec.strength * total


def eval_cell_v2(x: np.ndarray, spec: PotentialSpec) -> np.ndarray:
    """tanh well -depth [1 + tanh(x + x0)] [1 + tanh(-x + x0)], x in Bohr."""
    x = np.asarray(x, dtype=float)
    return -spec.strength * (1.0 + np.tanh(x + spec.x0)) * (1.0 + np.tanh(spec.x0 - x))


def eval_cell(x: np.ndarray, spec: PotentialSpec) -> np.ndarray:
    if spec.kind == PotentialKind.V1:
        return eval_cell_v1(x, spec)
    if spec.kind == PotentialKind.V2:
        return eval_cell_v2(x, spec)
    return np.zeros_like(np.asarray(x, dtype=float))


def image_cutoff(spec: PotentialSpec) -> int:
    """Number of lattice images per side so the omitted tail is negligible."""
    if spec.kind == PotentialKind.FREE:
        return 0
    if spec.kind == PotentialKind.V1:
        # finite support: |x - c| <= width/2, c inside the cell
        return int(np.ceil(0.5 * spec.width_scale / spec.a)) + 1
    # |V2(x)| <= 4 depth e^{2 x0} e^{-2|x|}; geometric tail over images
    prefactor = 8.0 * np.exp(2.0 * spec.x0) / (1.0 - np.exp(-2.0 * spec.a))
    for j in range(1, MAX_IMAGES):
        nearest = j * spec.a - 0.5 * spec.a
        if prefactor * np.exp(-2.0 * nearest) < IMAGE_TAIL_TOLERANCE:
            return j
    raise PotentialError(
        f"image sum does not converge within {MAX_IMAGES} images (a={spec.a})"
    )


def periodize(spec: PotentialSpec, grid: np.ndarray) -> PotentialSamples:
    """Sum lattice images of the cell potential onto the grid."""
    if len(grid) < 8:
        raise PotentialError(f"grid needs at least 8 points, got {len(grid)}")
    images = image_cutoff(spec)
    values = eval_cell(grid, spec)
    for j in range(1, images + 1):
        shift = j * spec.a
        # symmetric pairing keeps even potentials even on a symmetric grid
        pair = eval_cell(grid - shift, spec) + eval_cell(grid + shift, spec)
        values = values + pair
    if not np.all(np.isfinite(values)):
        raise PotentialError("non-finite potential samples")
    samples = PotentialSamples(grid=grid, values=values, a=spec.a, images=images)
    logger.info(
        "Periodized %s on %d points with %d images per side (min %.4f eV)",
        spec.kind.value,
        len(grid),
        images,
        from_internal(float(values.min()), "eV"),
    )
    if spec.kind != PotentialKind.FREE and samples.is_flat:
        logger.warning(
            "Periodized %s is constant (%.6f eV): the %.3g a window covers "
            "whole cells and the band structure is free-electron like",
            spec.kind.value,
            from_internal(float(values[0]), "eV"),
            spec.width_cells,
        )
    return samples


def calibrate_gap(
    spec: PotentialSpec,
    target_gap: float,
    gap_fn: Callable[[PotentialSpec], float],
    tolerance: Optional[float] = None,
) -> PotentialSpec:
    """Bisect depth_scale in [0.25, 4] until gap_fn(spec) matches target_gap.

    gap_fn maps a potential to its direct gap (atomic units); the band
    solver supplies it. Returns the spec with adjusted depth_scale.
    """
    if target_gap <= 0:
        raise CalibrationError(f"target gap must be positive, got {target_gap}")
    if tolerance is None:
        tolerance = to_internal(1e-3, "eV")

    def scaled(scale: float) -> PotentialSpec:
        return spec.model_copy(update={"depth_scale": scale})

    current = gap_fn(spec)
    if abs(current - target_gap) <= tolerance:
        logger.info("Gap already on target at depth_scale=%.6f", spec.depth_scale)
        return spec

    lo, hi = DEPTH_SCALE_BRACKET
    gap_lo = gap_fn(scaled(lo))
    gap_hi = gap_fn(scaled(hi))
    if not min(gap_lo, gap_hi) <= target_gap <= max(gap_lo, gap_hi):
        raise CalibrationError(
            "target gap %.4f eV not bracketed: depth_scale in [%g, %g] gives "
            "gaps %.4f .. %.4f eV"
            % (
                from_internal(target_gap, "eV"),
                lo,
                hi,
                from_internal(min(gap_lo, gap_hi), "eV"),
                from_internal(max(gap_lo, gap_hi), "eV"),
            )
        )

    scale = bisect(
        lambda s: gap_fn(scaled(s)) - target_gap, lo, hi, xtol=1e-9, maxiter=200
    )
    calibrated = scaled(float(scale))
    achieved = gap_fn(calibrated)
    if abs(achieved - target_gap) > tolerance:
        raise CalibrationError(
            "bisection ended at depth_scale=%.8f with gap %.6f eV (target %.6f eV)"
            % (
                scale,
                from_internal(achieved, "eV"),
                from_internal(target_gap, "eV"),
            )
        )
    logger.info(
        "Calibrated depth_scale=%.8f, gap %.6f eV",
        scale,
        from_internal(achieved, "eV"),
    )
    return calibrated
