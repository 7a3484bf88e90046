# bloch-hhg - Currents in both gauges and the harmonic spectrum

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Literal, NamedTuple, Optional, Sequence

import numpy as np
from scipy.fft import rfft, rfftfreq
from scipy.interpolate import PchipInterpolator
from scipy.signal import get_window

from bloch_hhg.errors import ObservableError
from bloch_hhg.units import CONSTANTS

from .gauge import ShiftCheck, build_snapshot, population_shift_check
from .matels import MatrixElementSet
from .propagate import EnsembleHistory, EnsembleMode, EnsembleSpec
from .pulse import GaugeTime, PulseSpec, electric_field, vector_potential

logger = logging.getLogger(__name__)

MIN_SPECTRUM_SAMPLES = 64
SPECTRUM_OVERSAMPLING = 4

Gauge = Literal["velocity", "length"]


class Currents(NamedTuple):
    J: float
    j: float
    Pdot: float
    # |Im| of the assembled coherence sum, discarded from Pdot
    residue: float = 0.0


def crystal_length(matels: MatrixElementSet) -> float:
    """Normalization volume a (M - 1)."""
    return matels.grid.a * matels.grid.n_unique


def _split(amplitudes: np.ndarray, momenta: np.ndarray) -> tuple[float, float, float]:
    """(sum |c|^2 P_nn, Re sum_{n != n'} c*_n c_n' P_nn', |Im| of the latter)."""
    diagonal = np.real(np.diagonal(momenta, axis1=1, axis2=2))
    populations = np.abs(amplitudes) ** 2
    intra = math.fsum((populations * diagonal).ravel().tolist())

    off = momenta.copy()
    n = off.shape[-1]
    off[:, np.arange(n), np.arange(n)] = 0.0
    form = amplitudes.conj() * (off @ amplitudes[:, :, None])[:, :, 0]
    inter = math.fsum(form.real.ravel().tolist())
    residue = abs(math.fsum(form.imag.ravel().tolist()))
    return intra, inter, residue


def current_velocity(
    c: np.ndarray,
    k_indices: Sequence[int],
    A: float,
    matels: MatrixElementSet,
    occupied: Optional[int] = None,
) -> Currents:
    """Velocity-gauge currents from coefficients (K, N_b) of the occupied k0.

    j_v carries the rigid -(N e0^2 / V m) A term on top of the band velocities.
    """
    c = np.atleast_2d(c)
    if occupied is None:
        occupied = c.shape[0]
    prefactor = CONSTANTS.e0 / (crystal_length(matels) * CONSTANTS.m_e)
    intra, inter, residue = _split(
        c, matels.momenta[np.asarray(k_indices, dtype=int)]
    )
    j = prefactor * intra - occupied * CONSTANTS.e0 * prefactor * A
    P = prefactor * inter
    return Currents(j + P, j, P, abs(prefactor) * residue)


def current_length(
    b: np.ndarray, target_indices: Sequence[int], matels: MatrixElementSet
) -> Currents:
    """Length-gauge currents from coefficients at the shifted indices k'."""
    b = np.atleast_2d(b)
    prefactor = CONSTANTS.e0 / (crystal_length(matels) * CONSTANTS.m_e)
    intra, inter, residue = _split(
        b, matels.momenta[np.asarray(target_indices, dtype=int)]
    )
    j = prefactor * intra
    P = prefactor * inter
    return Currents(j + P, j, P, abs(prefactor) * residue)


@dataclass
class CurrentRecord:
    """Currents of both gauges at every gauge time, plus per-time gauge diagnostics."""

    times: np.ndarray
    shifts: np.ndarray
    A: np.ndarray
    F: np.ndarray
    J_v: np.ndarray
    j_v: np.ndarray
    Pdot_v: np.ndarray
    J_l: np.ndarray
    j_l: np.ndarray
    Pdot_l: np.ndarray
    norm_defect: np.ndarray
    norm_bound: np.ndarray
    imag_residue: float = 0.0
    shift_checks: list[ShiftCheck] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.times)

    def total(self, gauge: Gauge) -> np.ndarray:
        return self.J_v if gauge == "velocity" else self.J_l


def assemble_record(
    history: EnsembleHistory,
    gauge_times: Sequence[GaugeTime],
    matels: MatrixElementSet,
    pulse: PulseSpec,
    ensemble: EnsembleSpec,
    threads: int = 1,
    check_shifts: bool = True,
) -> CurrentRecord:
    """Transform every recorded sample to length gauge and evaluate the currents."""
    if len(gauge_times) != len(history.times):
        raise ObservableError(
            f"{len(gauge_times)} gauge times for {len(history.times)} samples"
        )
    if len(gauge_times) == 0:
        raise ObservableError("no gauge times to assemble")
    grid = matels.grid
    k_indices = np.asarray(history.k_indices, dtype=int)

    def evaluate(slot: int):
        gt = gauge_times[slot]
        c = history.coefficients[slot]
        A = vector_potential(gt.t, pulse)
        velocity = current_velocity(c, k_indices, A, matels)
        snapshot = build_snapshot(c, k_indices, gt, matels.overlaps, grid)
        length = current_length(snapshot.b, snapshot.target_indices, matels)
        check = None
        if check_shifts and ensemble.mode == EnsembleMode.FULL_BAND:
            check = population_shift_check(snapshot, grid, pulse, ensemble.n0)
        return (
            A,
            velocity,
            length,
            snapshot.max_norm_defect,
            snapshot.max_norm_bound,
            check,
        )

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        rows = list(pool.map(evaluate, range(len(gauge_times))))

    times = np.array([g.t for g in gauge_times])
    velocity = [r[1] for r in rows]
    length = [r[2] for r in rows]
    record = CurrentRecord(
        times=times,
        shifts=np.array([g.shift for g in gauge_times], dtype=int),
        A=np.array([r[0] for r in rows]),
        F=np.asarray(electric_field(times, pulse)),
        J_v=np.array([v.J for v in velocity]),
        j_v=np.array([v.j for v in velocity]),
        Pdot_v=np.array([v.Pdot for v in velocity]),
        J_l=np.array([x.J for x in length]),
        j_l=np.array([x.j for x in length]),
        Pdot_l=np.array([x.Pdot for x in length]),
        norm_defect=np.array([r[3] for r in rows]),
        norm_bound=np.array([r[4] for r in rows]),
        imag_residue=max(c.residue for c in velocity + length),
        shift_checks=[r[5] for r in rows if r[5] is not None],
    )
    logger.info(
        "Assembled currents at %d gauge times, max norm defect %.2e",
        len(record),
        float(np.max(record.norm_defect)),
    )
    return record


def gauge_discrepancy(record: CurrentRecord) -> dict[str, float]:
    """delta_X = max |X_v - X_l| / max |J_v| for X in J, j and P."""
    if len(record) == 0:
        raise ObservableError("empty current record")
    scale = float(np.max(np.abs(record.J_v)))
    if scale == 0.0:
        scale = 1.0
    pairs = {
        "delta_J": (record.J_v, record.J_l),
        "delta_j": (record.j_v, record.j_l),
        "delta_P": (record.Pdot_v, record.Pdot_l),
    }
    return {
        name: float(np.max(np.abs(v - l))) / scale for name, (v, l) in pairs.items()
    }


@dataclass
class Spectrum:
    harmonic_order: np.ndarray
    power: np.ndarray
    window: str
    time_energy: float
    spectral_energy: float

    @property
    def parseval_defect(self) -> float:
        if self.time_energy == 0.0:
            return abs(self.spectral_energy)
        return abs(self.spectral_energy - self.time_energy) / self.time_energy


def power_spectrum(
    times: np.ndarray,
    values: np.ndarray,
    omega: float,
    window: str = "hann",
    oversampling: int = SPECTRUM_OVERSAMPLING,
) -> Spectrum:
    """Windowed power spectrum of a non-uniformly sampled signal.

    The samples are resampled by monotone cubic interpolation onto a
    uniform grid (power of two, at least oversampling x the input count).
    """
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    if len(times) < MIN_SPECTRUM_SAMPLES:
        raise ObservableError(
            f"spectrum needs at least {MIN_SPECTRUM_SAMPLES} samples, got {len(times)}"
        )
    n = 1 << int(np.ceil(np.log2(oversampling * len(times))))
    uniform = np.linspace(times[0], times[-1], n, endpoint=False)
    dt = uniform[1] - uniform[0]
    signal = PchipInterpolator(times, values)(uniform) * get_window(window, n)

    transform = rfft(signal)
    power = np.abs(transform) ** 2
    # one-sided sum: DC and Nyquist once, every other bin twice
    weights = np.full(len(power), 2.0)
    weights[0] = 1.0
    if n % 2 == 0:
        weights[-1] = 1.0
    spectral = math.fsum((weights * power).tolist()) / n
    energy = math.fsum((signal**2).tolist())
    return Spectrum(
        harmonic_order=2.0 * np.pi * rfftfreq(n, dt) / omega,
        power=power,
        window=window,
        time_energy=energy,
        spectral_energy=spectral,
    )


def hhg_spectrum(
    record: CurrentRecord,
    pulse: PulseSpec,
    gauge: Gauge = "velocity",
    window: str = "hann",
) -> Spectrum:
    """Harmonic spectrum of the total current J(t) of one gauge."""
    spectrum = power_spectrum(record.times, record.total(gauge), pulse.omega, window)
    logger.info(
        "Spectrum (%s gauge, %s window): %d bins up to order %.1f",
        gauge,
        window,
        len(spectrum.power),
        float(spectrum.harmonic_order[-1]),
    )
    return spectrum
