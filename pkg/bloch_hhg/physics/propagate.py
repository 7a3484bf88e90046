# bloch-hhg - Velocity-gauge coefficient propagation

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Optional, Sequence

import numpy as np

from bloch_hhg.budget import ToleranceBudget
from bloch_hhg.errors import PropagationError
from bloch_hhg.units import CONSTANTS

from .matels import MatrixElementSet, hext_v_matrix
from .pulse import PulseSpec, vector_potential

logger = logging.getLogger(__name__)

DEFAULT_STEPS_PER_CYCLE = 2048
NORM_DRIFT_LIMIT = 1e-6
# |lambda dt| bound of classic RK4 on the imaginary axis is 2 sqrt(2)
STABILITY_LIMIT = 2.5


class EnsembleMode(str, Enum):
    SINGLE_K = "single_k"
    FULL_BAND = "full_band"


@dataclass(frozen=True)
class EnsembleSpec:
    """Initially occupied states: band n0 (1-based) at k = 0 or across the zone."""

    mode: EnsembleMode = EnsembleMode.SINGLE_K
    n0: int = 1

    def k_indices(self, grid) -> list[int]:
        if self.mode == EnsembleMode.SINGLE_K:
            return [grid.zero_index]
        return list(range(grid.n_unique))

    def occupied(self, grid) -> int:
        return len(self.k_indices(grid))


@dataclass(frozen=True)
class CoefficientState:
    k0: float
    t: float
    c: np.ndarray

    @property
    def norm(self) -> float:
        return float(np.sum(np.abs(self.c) ** 2))

    def density_matrix(self) -> np.ndarray:
        return np.outer(self.c, self.c.conj())


def init_state(k0: float, n0: int, n_bands: int) -> CoefficientState:
    """c_n = delta_{n,n0} at t = 0; n0 is 1-based."""
    if not 1 <= n0 <= n_bands:
        raise PropagationError(f"initial band {n0} outside 1..{n_bands}")
    c = np.zeros(n_bands, dtype=complex)
    c[n0 - 1] = 1.0
    return CoefficientState(k0=k0, t=0.0, c=c)


def block_rhs(
    c: np.ndarray,
    t: float,
    energies: np.ndarray,
    momenta: np.ndarray,
    pulse: PulseSpec,
    include_a_squared: bool = True,
) -> np.ndarray:
    """dc/dt for rows of independent k0.

    c and energies are (B, N_b), momenta is (B, N_b, N_b).
    """
    A = vector_potential(t, pulse)
    out = energies * c
    if A != 0.0:
        interaction = hext_v_matrix(momenta, A, include_a_squared)
        out = out + (interaction @ c[:, :, None])[:, :, 0]
    return (-1j / CONSTANTS.hbar) * out


def rhs(
    c: np.ndarray,
    t: float,
    index: int,
    matels: MatrixElementSet,
    pulse: PulseSpec,
    include_a_squared: bool = True,
) -> np.ndarray:
    """dc/dt = -(i/hbar) [diag(E(k0)) + H_ext(k0, A(t))] c."""
    return block_rhs(
        c[None, :],
        t,
        matels.energies[index][None, :],
        matels.momenta[index][None],
        pulse,
        include_a_squared,
    )[0]


def step_grid(
    pulse: PulseSpec, n_steps_per_cycle: int, sample_times: Sequence[float]
) -> np.ndarray:
    """Uniform RK4 nodes merged with the sample times, so every sample is landed on."""
    dt = pulse.carrier_period / n_steps_per_cycle
    n = int(np.ceil(pulse.duration / dt))
    base = np.minimum(np.arange(n + 1) * dt, pulse.duration)
    samples = np.asarray(sample_times, dtype=float)
    # drop base nodes that nearly coincide with a sample
    tolerance = 1e-9 * dt
    position = np.searchsorted(samples, base)
    nearest = np.minimum(
        np.abs(base - samples[np.clip(position, 0, len(samples) - 1)]),
        np.abs(base - samples[np.clip(position - 1, 0, len(samples) - 1)]),
    )
    nodes = np.union1d(base[nearest > tolerance], samples)
    return nodes[(nodes >= 0.0) & (nodes <= pulse.duration)]


class Propagator:
    """Classic RK4 for a block of independent k0 rows.

    Each row runs with its own reference energy E_ref = E_n0(k0) removed
    from the diagonal; the phase exp(-i E_ref t/hbar) is restored on every
    recorded sample.
    """

    def __init__(
        self,
        matels: MatrixElementSet,
        pulse: PulseSpec,
        n_steps_per_cycle: int = DEFAULT_STEPS_PER_CYCLE,
        include_a_squared: bool = True,
        drift_limit: float = NORM_DRIFT_LIMIT,
    ):
        if n_steps_per_cycle < 1:
            raise PropagationError(
                f"n_steps_per_cycle must be positive, got {n_steps_per_cycle}"
            )
        self.matels = matels
        self.pulse = pulse
        self.n_steps_per_cycle = n_steps_per_cycle
        self.include_a_squared = include_a_squared
        self.drift_limit = drift_limit

    @property
    def dt(self) -> float:
        return self.pulse.carrier_period / self.n_steps_per_cycle

    def _check_stability(self, shifted: np.ndarray) -> None:
        spread = float(np.max(np.abs(shifted))) / CONSTANTS.hbar
        if spread * self.dt > STABILITY_LIMIT:
            needed = int(np.ceil(spread * self.pulse.carrier_period / STABILITY_LIMIT))
            raise PropagationError(
                f"RK4 step unstable: max |E - E_ref| dt = {spread * self.dt:.3f} "
                f"> {STABILITY_LIMIT}; use n_steps_per_cycle >= {needed}"
            )

    def run(
        self, indices: Sequence[int], n0: int, sample_times: Sequence[float]
    ) -> tuple[np.ndarray, float]:
        """Propagate rows c(0) = e_{n0} for the given k indices.

        Returns (coefficients (n_samples, B, N_b), worst norm drift).
        """
        samples = np.asarray(sample_times, dtype=float)
        if samples.size == 0:
            raise PropagationError("no sample times requested")
        if np.any(np.diff(samples) <= 0):
            raise PropagationError("sample times must be strictly increasing")
        if samples[0] < 0.0 or samples[-1] > self.pulse.duration:
            raise PropagationError("sample times must lie within [0, T]")

        idx = np.asarray(indices, dtype=int)
        n_bands = self.matels.n_bands
        energies = self.matels.energies[idx]
        reference = energies[:, n0 - 1]
        shifted = energies - reference[:, None]
        self._check_stability(shifted)

        momenta = self.matels.momenta[idx]

        def derivative(t: float, c: np.ndarray) -> np.ndarray:
            return block_rhs(
                c, t, shifted, momenta, self.pulse, self.include_a_squared
            )

        c = np.zeros((len(idx), n_bands), dtype=complex)
        c[:, n0 - 1] = 1.0
        nodes = step_grid(self.pulse, self.n_steps_per_cycle, samples)
        record = np.empty((len(samples), len(idx), n_bands), dtype=complex)
        budget = ToleranceBudget(self.drift_limit, label="norm drift")

        def store(slot: int, t: float) -> None:
            phase = np.exp(-1j * reference * t / CONSTANTS.hbar)
            record[slot] = c * phase[:, None]
            budget.record(float(np.max(np.abs(np.sum(np.abs(c) ** 2, axis=1) - 1.0))))
            if budget.exceeded:
                raise PropagationError(
                    f"norm drift {budget.worst:.2e} > {self.drift_limit:.0e} at "
                    f"t={t:.6g} (k indices {idx[0]}..{idx[-1]}); step too large, "
                    f"increase n_steps_per_cycle (now {self.n_steps_per_cycle})"
                )

        slot = 0
        if nodes[0] == samples[0]:
            store(0, nodes[0])
            slot = 1
        for t, t_next in zip(nodes[:-1], nodes[1:]):
            h = t_next - t
            k1 = derivative(t, c)
            k2 = derivative(t + 0.5 * h, c + 0.5 * h * k1)
            k3 = derivative(t + 0.5 * h, c + 0.5 * h * k2)
            k4 = derivative(t_next, c + h * k3)
            c = c + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
            if slot < len(samples) and t_next == samples[slot]:
                store(slot, t_next)
                slot += 1
        if slot != len(samples):
            raise PropagationError(
                f"landed on {slot} of {len(samples)} sample times"
            )
        return record, budget.worst


def propagate_k(
    index: int,
    ensemble: EnsembleSpec,
    pulse: PulseSpec,
    matels: MatrixElementSet,
    sample_times: Sequence[float],
    n_steps_per_cycle: int = DEFAULT_STEPS_PER_CYCLE,
    include_a_squared: bool = True,
) -> list[CoefficientState]:
    """Coefficient history of one k block at the requested times."""
    propagator = Propagator(matels, pulse, n_steps_per_cycle, include_a_squared)
    record, _ = propagator.run([index], ensemble.n0, sample_times)
    k0 = float(matels.grid.points[index])
    return [
        CoefficientState(k0=k0, t=float(t), c=record[i, 0])
        for i, t in enumerate(sample_times)
    ]


class EnsembleHistory:
    """c_{n,k0}(t) for every occupied k0 at every sample time."""

    def __init__(
        self,
        k_indices: list[int],
        times: np.ndarray,
        coefficients: np.ndarray,
        worst_drift: float,
    ):
        self.k_indices = k_indices
        self.times = times
        # (n_times, K, N_b)
        self.coefficients = coefficients
        self.worst_drift = worst_drift

    def populations(self) -> np.ndarray:
        return np.abs(self.coefficients) ** 2


def propagate_ensemble(
    matels: MatrixElementSet,
    pulse: PulseSpec,
    ensemble: EnsembleSpec,
    sample_times: Sequence[float],
    n_steps_per_cycle: int = DEFAULT_STEPS_PER_CYCLE,
    threads: int = 1,
    block_size: int = 32,
    include_a_squared: bool = True,
    budget: Optional[ToleranceBudget] = None,
) -> EnsembleHistory:
    """Propagate every occupied k0 in independent blocks; order follows k index."""
    indices = ensemble.k_indices(matels.grid)
    propagator = Propagator(matels, pulse, n_steps_per_cycle, include_a_squared)
    blocks = [indices[i : i + block_size] for i in range(0, len(indices), block_size)]
    logger.info(
        "Propagating %d k-blocks in %d chunks, dt = T_c/%d, %d sample times",
        len(indices),
        len(blocks),
        n_steps_per_cycle,
        len(sample_times),
    )
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(
            pool.map(lambda b: propagator.run(b, ensemble.n0, sample_times), blocks)
        )

    drift = 0.0
    for _, worst in results:
        drift = max(drift, worst)
        if budget is not None:
            budget.record(worst)
    coefficients = np.concatenate([r[0] for r in results], axis=1)
    logger.info("Propagation done, worst norm drift %.2e", drift)
    return EnsembleHistory(
        indices, np.asarray(sample_times, dtype=float), coefficients, drift
    )


def richardson_factor(
    matels: MatrixElementSet,
    pulse: PulseSpec,
    ensemble: EnsembleSpec,
    n_steps_per_cycle: int = DEFAULT_STEPS_PER_CYCLE,
    index: Optional[int] = None,
    include_a_squared: bool = True,
) -> float:
    """||c_n - c_2n|| / ||c_2n - c_4n|| at t = T; about 16 for a 4th-order scheme."""
    if index is None:
        index = ensemble.k_indices(matels.grid)[0]
    finals = []
    for n in (n_steps_per_cycle, 2 * n_steps_per_cycle, 4 * n_steps_per_cycle):
        propagator = Propagator(matels, pulse, n, include_a_squared, drift_limit=0)
        record, _ = propagator.run([index], ensemble.n0, [0.0, pulse.duration])
        finals.append(record[-1, 0])
    coarse = np.linalg.norm(finals[0] - finals[1])
    fine = np.linalg.norm(finals[1] - finals[2])
    if fine == 0.0:
        return float("inf") if coarse > 0.0 else float("nan")
    factor = float(coarse / fine)
    logger.info("Richardson factor %.3f at %d steps/cycle", factor, n_steps_per_cycle)
    return factor
