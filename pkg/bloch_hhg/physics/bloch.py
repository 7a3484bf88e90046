# bloch-hhg - Bloch eigenproblem in a plane-wave basis

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum
from typing import Callable

import numpy as np
from scipy import linalg

from bloch_hhg.errors import BandSolverError
from bloch_hhg.units import CONSTANTS

from .potential import PotentialSamples, PotentialSpec, cell_grid, periodize

logger = logging.getLogger(__name__)

# relative tolerance for treating two Fourier magnitudes as tied
PHASE_TIE_TOLERANCE = 1e-8


class PhaseConvention(str, Enum):
    LARGEST_FOURIER = "largest_fourier"
    FIRST_SAMPLE = "first_sample"


class KGrid:
    """k_m = -pi/a + (m-1) dk, m = 1..M, both zone edges included.

    Brillouin-zone sums use the first M-1 (unique) points only.
    """

    def __init__(self, a: float, M: int):
        if M < 3:
            raise BandSolverError(f"k-grid needs at least 3 points, got {M}")
        self.a = a
        self.M = M
        self.dk = 2.0 * np.pi / (a * (M - 1))
        # integer numerators keep k and -k exact negatives of each other
        self.points = (2 * np.arange(M) - (M - 1)) * (np.pi / (a * (M - 1)))
        self.points[0] = -np.pi / a
        self.points[-1] = np.pi / a

    @property
    def n_unique(self) -> int:
        return self.M - 1

    @property
    def unique_points(self) -> np.ndarray:
        return self.points[:-1]

    @property
    def zero_index(self) -> int:
        if self.M % 2 == 0:
            raise BandSolverError(f"k = 0 is not a grid point for even M={self.M}")
        return (self.M - 1) // 2

    def shifted_index(self, index: np.ndarray | int, shift: int):
        """Wrap unique index + shift into the zone.

        Returns (index', winding) with k[index] + shift*dk = k[index'] + winding*2pi/a.
        """
        raw = np.asarray(index) + shift
        winding = np.floor_divide(raw, self.n_unique)
        return raw - winding * self.n_unique, winding

    def mirror_index(self, index: int) -> int:
        """Index of -k for a grid index."""
        return self.M - 1 - index


class PlaneWaveBasis:
    """N plane waves e^{i G_j x}/sqrt(a) sampled on the cell grid.

    Coefficient vectors are unit-normalized, which makes the sampled
    functions cell-normalized: (a/N) sum_m |u(x_m)|^2 = 1.
    """

    def __init__(self, a: float, n_points: int):
        self.a = a
        self.n_points = n_points
        self.labels = np.rint(np.fft.fftfreq(n_points) * n_points).astype(int)
        self.G = 2.0 * np.pi * self.labels / a
        self.x = cell_grid(a, n_points)
        self.phases = np.exp(1j * np.outer(self.x, self.G)) / np.sqrt(a)

    @property
    def alias(self) -> float:
        """Momentum period of the sampled plane waves, 2 pi N / a."""
        return 2.0 * np.pi * self.n_points / self.a

    def momenta(self, k: float) -> np.ndarray:
        """k + G_j folded to the alias of smallest magnitude."""
        q = k + self.G
        q = np.where(np.abs(q + self.alias) < np.abs(q), q + self.alias, q)
        q = np.where(np.abs(q - self.alias) < np.abs(q), q - self.alias, q)
        return q

    def to_real_space(self, coefficients: np.ndarray) -> np.ndarray:
        return self.phases @ coefficients

    def to_coefficients(self, values: np.ndarray) -> np.ndarray:
        return (self.a / self.n_points) * (self.phases.conj().T @ values)

    def potential_matrix(self, samples: PotentialSamples) -> np.ndarray:
        """Circulant matrix <G_i|V|G_j> of the sampled potential."""
        n = self.n_points
        if samples.n_points != n:
            raise BandSolverError(
                f"potential sampled on {samples.n_points} points, basis has {n}"
            )
        coeffs = np.fft.fft(samples.values) / n
        diff = self.labels[:, None] - self.labels[None, :]
        # grid starts at -a/2: e^{-i(G_i - G_j) x_0} = (-1)^(n_i - n_j)
        sign = np.where(diff % 2 == 0, 1.0, -1.0)
        matrix = coeffs[diff % n] * sign
        return 0.5 * (matrix + matrix.conj().T)


@dataclass(frozen=True)
class BlochState:
    band_index: int  # 1-based
    k: float
    energy: float
    u: np.ndarray  # real-space samples on the cell grid
    coefficients: np.ndarray  # plane-wave coefficients


def build_bloch_hamiltonian(
    k: float, samples: PotentialSamples, basis: PlaneWaveBasis | None = None
) -> np.ndarray:
    """(1/2m)(-i d/dx + k)^2 + V(x) in the plane-wave basis."""
    if basis is None:
        basis = PlaneWaveBasis(samples.a, samples.n_points)
    return assemble_hamiltonian(k, basis.potential_matrix(samples), basis)


def assemble_hamiltonian(
    k: float, potential: np.ndarray, basis: PlaneWaveBasis
) -> np.ndarray:
    """Kinetic diagonal at k added to a precomputed potential matrix."""
    if not np.isfinite(k):
        raise BandSolverError(f"non-finite k={k}")
    kinetic = (CONSTANTS.hbar * basis.momenta(k)) ** 2 / (2.0 * CONSTANTS.m_e)
    return potential + np.diag(kinetic)


def fix_phase_coefficients(
    coefficients: np.ndarray,
    basis: PlaneWaveBasis,
    convention: PhaseConvention = PhaseConvention.LARGEST_FOURIER,
) -> np.ndarray:
    """Multiply each column by a unit phase to make it deterministic.

    LARGEST_FOURIER: the Fourier coefficient of largest magnitude becomes
    real-positive, ties resolved by the lowest FFT-ordered index.
    FIRST_SAMPLE: the first real-space sample above 1e-8 of the column
    maximum becomes real-positive.
    """
    single = coefficients.ndim == 1
    coeffs = coefficients[:, None] if single else coefficients
    if convention == PhaseConvention.FIRST_SAMPLE:
        reference = basis.to_real_space(coeffs)
    else:
        reference = coeffs
    mags = np.abs(reference)
    cutoff = mags.max(axis=0) * (1.0 - PHASE_TIE_TOLERANCE)
    if convention == PhaseConvention.FIRST_SAMPLE:
        cutoff = mags.max(axis=0) * PHASE_TIE_TOLERANCE
        picks = np.argmax(mags > cutoff[None, :], axis=0)
    else:
        picks = np.argmax(mags >= cutoff[None, :], axis=0)
    chosen = reference[picks, np.arange(coeffs.shape[1])]
    fixed = coeffs * (np.abs(chosen) / chosen)[None, :]
    return fixed[:, 0] if single else fixed


def fix_phase(
    state: BlochState,
    basis: PlaneWaveBasis,
    convention: PhaseConvention = PhaseConvention.LARGEST_FOURIER,
) -> BlochState:
    coefficients = fix_phase_coefficients(state.coefficients, basis, convention)
    return BlochState(
        band_index=state.band_index,
        k=state.k,
        energy=state.energy,
        u=basis.to_real_space(coefficients),
        coefficients=coefficients,
    )


def _diagonalize(
    k: float,
    potential: np.ndarray,
    basis: PlaneWaveBasis,
    n_bands: int,
    convention: PhaseConvention,
) -> tuple[np.ndarray, np.ndarray]:
    hamiltonian = assemble_hamiltonian(k, potential, basis)
    try:
        energies, vectors = linalg.eigh(hamiltonian)
    except (linalg.LinAlgError, ValueError) as e:
        raise BandSolverError(f"eigensolver failed at k={k:.6g}: {e}") from e
    vectors = fix_phase_coefficients(vectors[:, :n_bands], basis, convention)
    return energies[:n_bands], vectors


def solve_bands(
    k: float,
    samples: PotentialSamples,
    n_bands: int,
    basis: PlaneWaveBasis | None = None,
    convention: PhaseConvention = PhaseConvention.LARGEST_FOURIER,
) -> list[BlochState]:
    """Lowest n_bands eigenpairs at one k, ascending in energy."""
    if basis is None:
        basis = PlaneWaveBasis(samples.a, samples.n_points)
    if not 1 <= n_bands <= basis.n_points:
        raise BandSolverError(
            f"n_bands must lie in [1, {basis.n_points}], got {n_bands}"
        )
    energies, vectors = _diagonalize(
        k, basis.potential_matrix(samples), basis, n_bands, convention
    )
    real_space = basis.to_real_space(vectors)
    return [
        BlochState(
            band_index=n + 1,
            k=k,
            energy=float(energies[n]),
            u=real_space[:, n],
            coefficients=vectors[:, n],
        )
        for n in range(n_bands)
    ]


class BandStructure:
    """Band energies and phase-fixed u_{n,k} for every k of the grid."""

    def __init__(
        self,
        grid: KGrid,
        basis: PlaneWaveBasis,
        energies: np.ndarray,
        coefficients: np.ndarray,
    ):
        self.grid = grid
        self.basis = basis
        # (M, N_b)
        self.energies = energies
        # (M, N, N_b)
        self.coefficients = coefficients

    @property
    def n_bands(self) -> int:
        return int(self.energies.shape[1])

    def u(self, index: int) -> np.ndarray:
        """Real-space samples (N, N_b) at grid index."""
        return self.basis.to_real_space(self.coefficients[index])

    def state(self, band: int, index: int) -> BlochState:
        """BlochState for 1-based band at grid index."""
        vector = self.coefficients[index][:, band - 1]
        return BlochState(
            band_index=band,
            k=float(self.grid.points[index]),
            energy=float(self.energies[index, band - 1]),
            u=self.basis.to_real_space(vector),
            coefficients=vector,
        )

    def direct_gap(self, valence_band: int) -> float:
        """min_k [E_{n0+1}(k) - E_{n0}(k)] over the unique k-points."""
        if not 1 <= valence_band < self.n_bands:
            raise BandSolverError(
                f"valence band {valence_band} needs a band above it "
                f"(n_bands={self.n_bands})"
            )
        unique = self.energies[: self.grid.n_unique]
        return float(np.min(unique[:, valence_band] - unique[:, valence_band - 1]))


def compute_band_structure(
    grid: KGrid,
    samples: PotentialSamples,
    n_bands: int,
    threads: int = 1,
    convention: PhaseConvention = PhaseConvention.LARGEST_FOURIER,
) -> BandStructure:
    """Solve every k of the grid; result independent of thread count."""
    basis = PlaneWaveBasis(samples.a, samples.n_points)
    if not 1 <= n_bands <= basis.n_points:
        raise BandSolverError(
            f"n_bands must lie in [1, {basis.n_points}], got {n_bands}"
        )
    potential = basis.potential_matrix(samples)

    def solve(k: float) -> tuple[np.ndarray, np.ndarray]:
        return _diagonalize(k, potential, basis, n_bands, convention)

    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        results = list(pool.map(solve, grid.points))

    energies = np.stack([r[0] for r in results])
    coefficients = np.stack([r[1] for r in results])
    logger.info(
        "Solved %d k-points x %d bands (N=%d), band 1 width %.4f eV",
        grid.M,
        n_bands,
        basis.n_points,
        float(np.ptp(energies[:, 0])) / CONSTANTS.hartree_per_eV,
    )
    return BandStructure(grid, basis, energies, coefficients)


def make_gap_oracle(
    grid: KGrid, n_points: int, valence_band: int, threads: int = 1
) -> Callable[[PotentialSpec], float]:
    """Direct gap of a potential spec, eigenvalues only (for calibration)."""
    basis = PlaneWaveBasis(grid.a, n_points)
    points = grid.unique_points

    def gap(spec: PotentialSpec) -> float:
        samples = periodize(spec, basis.x)
        potential = basis.potential_matrix(samples)

        def pair(k: float) -> float:
            values = linalg.eigh(
                assemble_hamiltonian(k, potential, basis),
                eigvals_only=True,
                subset_by_index=[valence_band - 1, valence_band],
            )
            return float(values[1] - values[0])

        with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
            return min(pool.map(pair, points))

    return gap
