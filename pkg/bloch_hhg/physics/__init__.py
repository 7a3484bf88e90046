# bloch-hhg physics kernels
#
# This package splits the simulation into focused modules:
#   potential.py   - model cell potentials, periodization, gap calibration
#   bloch.py       - k-grid, plane-wave basis, Bloch eigenproblem
#   matels.py      - momentum matrices and cross-k overlaps
#   pulse.py       - A(t), F(t) and gauge-commensurate times
#   propagate.py   - velocity-gauge RK4 propagation per k block
#   gauge.py       - velocity -> length gauge transformation
#   observables.py - currents in both gauges, discrepancy, spectrum
#
# All public names are re-exported here:
#   from bloch_hhg.physics import KGrid, compute_band_structure, ...

from .bloch import (
    BandStructure,
    BlochState,
    KGrid,
    PhaseConvention,
    PlaneWaveBasis,
    assemble_hamiltonian,
    build_bloch_hamiltonian,
    compute_band_structure,
    fix_phase,
    make_gap_oracle,
    solve_bands,
)
from .gauge import (
    GaugeSnapshot,
    ShiftCheck,
    build_snapshot,
    population_shift_check,
    to_length_gauge,
    to_velocity_gauge,
)
from .matels import (
    MatrixElementSet,
    OverlapTensor,
    band_velocity_defect,
    compute_matrix_elements,
    hext_v_matrix,
    momentum_matrix,
    overlap_matrix,
    unitarity_defect,
)
from .observables import (
    CurrentRecord,
    Spectrum,
    assemble_record,
    current_length,
    current_velocity,
    gauge_discrepancy,
    hhg_spectrum,
    power_spectrum,
)
from .potential import (
    PotentialKind,
    PotentialSamples,
    PotentialSpec,
    calibrate_gap,
    cell_grid,
    periodize,
)
from .propagate import (
    CoefficientState,
    EnsembleHistory,
    EnsembleMode,
    EnsembleSpec,
    Propagator,
    block_rhs,
    init_state,
    propagate_ensemble,
    propagate_k,
    rhs,
    richardson_factor,
)
from .pulse import (
    GaugeTime,
    PulseSpec,
    electric_field,
    gauge_times,
    max_field,
    peak_excursion,
    vector_potential,
)

__all__ = [
    "BandStructure",
    "BlochState",
    "KGrid",
    "PhaseConvention",
    "PlaneWaveBasis",
    "assemble_hamiltonian",
    "build_bloch_hamiltonian",
    "compute_band_structure",
    "fix_phase",
    "make_gap_oracle",
    "solve_bands",
    "GaugeSnapshot",
    "ShiftCheck",
    "build_snapshot",
    "population_shift_check",
    "to_length_gauge",
    "to_velocity_gauge",
    "MatrixElementSet",
    "OverlapTensor",
    "band_velocity_defect",
    "compute_matrix_elements",
    "hext_v_matrix",
    "momentum_matrix",
    "overlap_matrix",
    "unitarity_defect",
    "CurrentRecord",
    "Spectrum",
    "assemble_record",
    "current_length",
    "current_velocity",
    "gauge_discrepancy",
    "hhg_spectrum",
    "power_spectrum",
    "PotentialKind",
    "PotentialSamples",
    "PotentialSpec",
    "calibrate_gap",
    "cell_grid",
    "periodize",
    "CoefficientState",
    "EnsembleHistory",
    "EnsembleMode",
    "EnsembleSpec",
    "Propagator",
    "block_rhs",
    "init_state",
    "propagate_ensemble",
    "propagate_k",
    "rhs",
    "richardson_factor",
    "GaugeTime",
    "PulseSpec",
    "electric_field",
    "gauge_times",
    "max_field",
    "peak_excursion",
    "vector_potential",
]
