"""Shared small-crystal fixtures.

The desk crystal is the tanh well (V2) on a 0.5 nm cell with 32 plane
waves and 17 k-points, small enough that every test solves it in well
under a second.
"""

import pytest

from bloch_hhg.physics.bloch import KGrid, compute_band_structure
from bloch_hhg.physics.matels import compute_matrix_elements
from bloch_hhg.physics.potential import (
    PotentialKind,
    PotentialSpec,
    cell_grid,
    periodize,
)
from bloch_hhg.physics.pulse import PulseSpec, gauge_times

DESK_POINTS = 32
DESK_K = 17


@pytest.fixture(scope="session")
def v2_spec():
    return PotentialSpec(kind=PotentialKind.V2)


@pytest.fixture(scope="session")
def free_spec():
    return PotentialSpec(kind=PotentialKind.FREE)


@pytest.fixture(scope="session")
def desk_grid(v2_spec):
    return KGrid(v2_spec.a, DESK_K)


@pytest.fixture(scope="session")
def v2_samples(v2_spec, desk_grid):
    return periodize(v2_spec, cell_grid(v2_spec.a, DESK_POINTS))


@pytest.fixture(scope="session")
def v2_bands(desk_grid, v2_samples):
    """Lowest 8 bands of the desk crystal."""
    return compute_band_structure(desk_grid, v2_samples, 8)


@pytest.fixture(scope="session")
def v2_bands_complete(desk_grid, v2_samples):
    """All 32 bands: the Bloch basis is complete on the grid."""
    return compute_band_structure(desk_grid, v2_samples, DESK_POINTS)


@pytest.fixture(scope="session")
def free_bands(free_spec, desk_grid):
    samples = periodize(free_spec, cell_grid(free_spec.a, DESK_POINTS))
    return compute_band_structure(desk_grid, samples, 8)


@pytest.fixture(scope="session")
def short_pulse():
    """Three cycles of 3 um light at 1 GV/m."""
    return PulseSpec.from_lab(wavelength_um=3.0, duration_fs=30.0, peak_field_GVm=1.0)


@pytest.fixture(scope="session")
def short_times(short_pulse, desk_grid):
    return gauge_times(short_pulse, desk_grid.dk)


@pytest.fixture(scope="session")
def v2_matels(v2_bands, short_times):
    reach = max(abs(g.shift) for g in short_times)
    return compute_matrix_elements(v2_bands, range(-reach, reach + 1))


@pytest.fixture(scope="session")
def v2_matels_complete(v2_bands_complete, short_times):
    reach = max(abs(g.shift) for g in short_times)
    return compute_matrix_elements(v2_bands_complete, range(-reach, reach + 1))
