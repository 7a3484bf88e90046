# bloch-hhg - Driving pulse and gauge-commensurate sampling times

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np
from numpy.typing import ArrayLike
from pydantic import BaseModel, ConfigDict, Field
from scipy.optimize import brentq

from bloch_hhg.units import CONSTANTS, photon_energy, to_internal

logger = logging.getLogger(__name__)

SCAN_SAMPLES_PER_CYCLE = 256
# root tolerance in carrier periods
ROOT_TOLERANCE = 1e-12
FIELD_FREE_SAMPLES = 256


class PulseSpec(BaseModel):
    """sin^2-enveloped cosine pulse, atomic units.

    A(t) = A0 sin^2(pi t/T) cos(omega t) on [0, T], zero elsewhere.
    """

    model_config = ConfigDict(frozen=True)

    wavelength: float = Field(default_factory=lambda: to_internal(3.0, "um"), gt=0.0)
    duration: float = Field(default_factory=lambda: to_internal(300.0, "fs"), gt=0.0)
    peak_field: float = Field(
        default_factory=lambda: to_internal(1.0, "GV/m"), ge=0.0
    )
    # explicit vector-potential amplitude; F0/omega when unset
    a0_override: Optional[float] = None

    @classmethod
    def from_lab(
        cls,
        wavelength_um: float = 3.0,
        duration_fs: float = 300.0,
        peak_field_GVm: float = 1.0,
        a0_override: Optional[float] = None,
    ) -> "PulseSpec":
        return cls(
            wavelength=to_internal(wavelength_um, "um"),
            duration=to_internal(duration_fs, "fs"),
            peak_field=to_internal(peak_field_GVm, "GV/m"),
            a0_override=a0_override,
        )

    @property
    def omega(self) -> float:
        return photon_energy(self.wavelength)

    @property
    def carrier_period(self) -> float:
        return 2.0 * np.pi / self.omega

    @property
    def amplitude(self) -> float:
        """A0."""
        if self.a0_override is not None:
            return self.a0_override
        return self.peak_field / self.omega

    @property
    def n_cycles(self) -> float:
        return self.duration / self.carrier_period


def _inside(t: np.ndarray, spec: PulseSpec) -> np.ndarray:
    return (t > 0.0) & (t < spec.duration)


def vector_potential(t: ArrayLike, spec: PulseSpec):
    """A(t); exactly zero outside (0, T)."""
    t = np.asarray(t, dtype=float)
    envelope = np.sin(np.pi * t / spec.duration) ** 2
    values = spec.amplitude * envelope * np.cos(spec.omega * t)
    values = np.where(_inside(t, spec), values, 0.0)
    return float(values) if values.ndim == 0 else values


def electric_field(t: ArrayLike, spec: PulseSpec):
    """F(t) = -dA/dt, taken analytically; zero outside (0, T)."""
    t = np.asarray(t, dtype=float)
    T, w = spec.duration, spec.omega
    values = -spec.amplitude * (
        (np.pi / T) * np.sin(2.0 * np.pi * t / T) * np.cos(w * t)
        - w * np.sin(np.pi * t / T) ** 2 * np.sin(w * t)
    )
    values = np.where(_inside(t, spec), values, 0.0)
    return float(values) if values.ndim == 0 else values


def momentum_shift(t: ArrayLike, spec: PulseSpec):
    """Crystal-momentum displacement -e0 A(t)/hbar (acceleration theorem)."""
    return -CONSTANTS.e0 * np.asarray(vector_potential(t, spec)) / CONSTANTS.hbar


def _uniform(spec: PulseSpec, n: int) -> np.ndarray:
    times = np.linspace(0.0, spec.duration, n + 1)
    times[-1] = spec.duration
    return times


def _scan(spec: PulseSpec, samples_per_cycle: int) -> np.ndarray:
    return _uniform(spec, max(2, int(np.ceil(spec.n_cycles * samples_per_cycle))))


def peak_excursion(spec: PulseSpec, samples_per_cycle: int = SCAN_SAMPLES_PER_CYCLE):
    """max_t |e0 A(t)/hbar| from a dense scan."""
    return float(np.max(np.abs(momentum_shift(_scan(spec, samples_per_cycle), spec))))


def max_field(spec: PulseSpec, samples_per_cycle: int = SCAN_SAMPLES_PER_CYCLE):
    return float(np.max(np.abs(electric_field(_scan(spec, samples_per_cycle), spec))))


@dataclass(frozen=True)
class GaugeTime:
    t: float
    # k-grid units: -e0 A(t)/hbar = shift * dk
    shift: int


def gauge_times(
    spec: PulseSpec, dk: float, samples_per_cycle: int = SCAN_SAMPLES_PER_CYCLE
) -> list[GaugeTime]:
    """All t in [0, T] where the k-displacement is an integer multiple of dk.

    Roots are bracketed on a dense scan and refined with Brent's method;
    t = 0 and t = T (shift 0) are always present.
    """
    if dk <= 0:
        raise ValueError(f"dk must be positive, got {dk}")
    if spec.amplitude == 0.0:
        # A vanishes identically: every instant is commensurate with shift 0
        n = max(FIELD_FREE_SAMPLES, int(np.ceil(spec.n_cycles * 16)))
        logger.info("Field-free pulse: %d uniform gauge times", n + 1)
        return [GaugeTime(t=float(t), shift=0) for t in _uniform(spec, n)]
    times = _scan(spec, samples_per_cycle)
    kappa = momentum_shift(times, spec)
    xtol = ROOT_TOLERANCE * spec.carrier_period

    found: dict[float, int] = {0.0: 0, spec.duration: 0}
    lo = int(np.floor(kappa.min() / dk))
    hi = int(np.ceil(kappa.max() / dk))
    for s in range(lo, hi + 1):
        residual = kappa - s * dk
        # scan points that hit a crossing exactly
        exact = (residual[1:-1] == 0.0) & (residual[:-2] * residual[2:] < 0.0)
        for i in np.flatnonzero(exact) + 1:
            found[float(times[i])] = s
        for i in np.flatnonzero(residual[:-1] * residual[1:] < 0.0):
            root = brentq(
                lambda t: float(momentum_shift(t, spec)) - s * dk,
                times[i],
                times[i + 1],
                xtol=xtol,
                rtol=4 * np.finfo(float).eps,
            )
            found[float(root)] = s

    result: list[GaugeTime] = []
    for t in sorted(found):
        if result and t - result[-1].t <= xtol:
            continue
        result.append(GaugeTime(t=t, shift=found[t]))
    if result[-1].t != spec.duration:
        result[-1] = GaugeTime(t=spec.duration, shift=0)

    logger.info(
        "Found %d gauge times over %.1f cycles, shifts %d..%d",
        len(result),
        spec.n_cycles,
        min(g.shift for g in result),
        max(g.shift for g in result),
    )
    return result
