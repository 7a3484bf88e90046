# bloch-hhg - Bloch-basis matrix elements

import logging
from concurrent.futures import ThreadPoolExecutor
from typing import Iterable, Literal

import numpy as np

from bloch_hhg.errors import GaugeError
from bloch_hhg.units import CONSTANTS

from .bloch import BandStructure

logger = logging.getLogger(__name__)

# unitarity defects above this are worth a warning
UNITARITY_WARNING = 1e-3

DefectNorm = Literal["max", "spectral"]


def momentum_matrix(bands: BandStructure, index: int) -> np.ndarray:
    """P_{nn'}(k) = hbar k delta_{nn'} - i hbar <u_n|d/dx|u_n'> at grid index.

    The derivative is spectral, so P = U^H diag(hbar (k + G)) U exactly.
    """
    coeffs = bands.coefficients[index]
    momenta = CONSTANTS.hbar * bands.basis.momenta(float(bands.grid.points[index]))
    return coeffs.conj().T @ (momenta[:, None] * coeffs)


def hext_v_matrix(
    momentum: np.ndarray, A: float, include_a_squared: bool = True
) -> np.ndarray:
    """Velocity-gauge interaction (-e0/m) P A + (e0^2 A^2 / 2m) I."""
    e0, m = CONSTANTS.e0, CONSTANTS.m_e
    matrix = (-e0 / m) * A * momentum
    if include_a_squared:
        matrix = matrix + (e0**2 * A**2 / (2.0 * m)) * np.eye(momentum.shape[-1])
    return matrix


def hermiticity_defect(matrix: np.ndarray) -> float:
    return float(np.max(np.abs(matrix - matrix.conj().T)))


def overlap_matrix(
    bands: BandStructure, i: int, j: int, winding: int = 0
) -> np.ndarray:
    """S_{nn'} = cell integral of u*_{n,k_i} e^{i w 2pi x/a} u_{n',k_j}.

    A nonzero winding w compares k_j with k_i + w 2pi/a, the image of k_i
    in the neighbouring zone.
    """
    basis = bands.basis
    left = bands.u(i)
    right = bands.u(j)
    if winding:
        right = np.exp(1j * winding * 2.0 * np.pi * basis.x / basis.a)[:, None] * right
    return (basis.a / basis.n_points) * (left.conj().T @ right)


def unitarity_defect(S: np.ndarray, norm: DefectNorm = "max") -> float:
    """Deviation of an overlap block (or a stack of blocks) from unitarity.

    "max": max |S S^H - I| elementwise.
    "spectral": ||S^H S - I||_2, which bounds the change of a vector norm
    under S relative to the input norm.
    """
    S = np.asarray(S)
    identity = np.eye(S.shape[-1])
    if norm == "max":
        product = S @ np.swapaxes(S.conj(), -1, -2)
        return float(np.max(np.abs(product - identity)))
    if norm == "spectral":
        product = np.swapaxes(S.conj(), -1, -2) @ S
        return float(np.max(np.linalg.norm(product - identity, ord=2, axis=(-2, -1))))
    raise ValueError(f"unknown norm '{norm}'")


class OverlapTensor:
    """Overlap blocks for every unique k0 and each precomputed shift.

    block(s)[i0] = S^{k', k0} with k' = k0 + s dk wrapped into the zone;
    row index runs over bands at k', column index over bands at k0.
    """

    def __init__(self, blocks: dict[int, np.ndarray]):
        self.blocks = blocks

    @property
    def shifts(self) -> list[int]:
        return sorted(self.blocks)

    @property
    def max_shift(self) -> int:
        return max((abs(s) for s in self.blocks), default=0)

    def block(self, shift: int) -> np.ndarray:
        try:
            return self.blocks[shift]
        except KeyError:
            raise GaugeError(
                f"no overlap block for shift {shift}: precomputed range is "
                f"+-{self.max_shift} (pulse excursion exceeds the shift range)"
            ) from None

    def defect(self, shift: int, norm: DefectNorm = "max") -> float:
        return unitarity_defect(self.block(shift), norm)


def band_velocity_defect(bands: BandStructure, momenta: np.ndarray) -> float:
    """max |P_nn(k)/m - (1/hbar) dE_n/dk| with a centred periodic difference."""
    grid = bands.grid
    energies = bands.energies[: grid.n_unique]
    slope = (np.roll(energies, -1, axis=0) - np.roll(energies, 1, axis=0)) / (
        2.0 * grid.dk * CONSTANTS.hbar
    )
    velocity = np.real(np.diagonal(momenta[: grid.n_unique], axis1=1, axis2=2))
    return float(np.max(np.abs(velocity / CONSTANTS.m_e - slope)))


class MatrixElementSet:
    """Precomputed, read-only matrix elements shared by propagation and observables."""

    def __init__(
        self, bands: BandStructure, momenta: np.ndarray, overlaps: OverlapTensor
    ):
        self.bands = bands
        # (M, N_b, N_b)
        self.momenta = momenta
        self.overlaps = overlaps

    @property
    def grid(self):
        return self.bands.grid

    @property
    def energies(self) -> np.ndarray:
        return self.bands.energies

    @property
    def n_bands(self) -> int:
        return self.bands.n_bands

    def hermiticity_defects(self) -> np.ndarray:
        P = self.momenta
        return np.max(np.abs(P - np.swapaxes(P.conj(), 1, 2)), axis=(1, 2))

    def unitarity_defects(self, norm: DefectNorm = "max") -> dict[int, float]:
        return {s: self.overlaps.defect(s, norm) for s in self.overlaps.shifts}


def _shift_block(bands: BandStructure, u: np.ndarray, shift: int) -> np.ndarray:
    grid, basis = bands.grid, bands.basis
    origin = np.arange(grid.n_unique)
    target, winding = grid.shifted_index(origin, shift)
    right = u
    if np.any(winding):
        phase = np.exp(1j * np.outer(winding, 2.0 * np.pi * basis.x / basis.a))
        right = phase[:, :, None] * u
    block = np.einsum("mxi,mxj->mij", u[target].conj(), right)
    return (basis.a / basis.n_points) * block


def compute_matrix_elements(
    bands: BandStructure, shifts: Iterable[int], threads: int = 1
) -> MatrixElementSet:
    """Momentum matrices for every k and overlap blocks for the given shifts."""
    grid = bands.grid
    with ThreadPoolExecutor(max_workers=max(1, threads)) as pool:
        momenta = np.stack(
            list(pool.map(lambda m: momentum_matrix(bands, m), range(grid.M)))
        )
        u = np.stack([bands.u(m) for m in range(grid.n_unique)])
        wanted = sorted(set(int(s) for s in shifts) | {0})
        blocks = dict(
            zip(wanted, pool.map(lambda s: _shift_block(bands, u, s), wanted))
        )

    overlaps = OverlapTensor(blocks)
    matels = MatrixElementSet(bands, momenta, overlaps)
    worst = max(matels.unitarity_defects().values())
    logger.info(
        "Matrix elements: %d k-points, %d shifts (max |s|=%d), "
        "max Hermiticity defect %.2e, max unitarity defect %.2e",
        grid.M,
        len(wanted),
        overlaps.max_shift,
        float(np.max(matels.hermiticity_defects())),
        worst,
    )
    if worst > UNITARITY_WARNING:
        logger.warning(
            "Overlap unitarity defect %.2e with %d bands; length-gauge "
            "populations carry truncation error",
            worst,
            bands.n_bands,
        )
    return matels
