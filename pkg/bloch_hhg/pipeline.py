# bloch-hhg Pipeline

import logging
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

import numpy as np

from bloch_hhg import output
from bloch_hhg.budget import ToleranceBudget
from bloch_hhg.checks import CheckResult, all_passed, at_least, at_most, flagged, within
from bloch_hhg.config import RunConfig, ensure_directories
from bloch_hhg.physics.bloch import (
    BandStructure,
    KGrid,
    compute_band_structure,
    make_gap_oracle,
)
from bloch_hhg.physics.matels import (
    MatrixElementSet,
    band_velocity_defect,
    compute_matrix_elements,
)
from bloch_hhg.physics.observables import (
    MIN_SPECTRUM_SAMPLES,
    CurrentRecord,
    Spectrum,
    assemble_record,
    gauge_discrepancy,
    hhg_spectrum,
)
from bloch_hhg.physics.potential import (
    PotentialSamples,
    PotentialSpec,
    calibrate_gap,
    cell_grid,
    periodize,
)
from bloch_hhg.physics.propagate import (
    NORM_DRIFT_LIMIT,
    propagate_ensemble,
    richardson_factor,
)
from bloch_hhg.physics.pulse import (
    GaugeTime,
    PulseSpec,
    gauge_times,
    max_field,
    peak_excursion,
)
from bloch_hhg.units import from_internal, to_internal

logger = logging.getLogger(__name__)

STAGES = ("bands", "matels", "run")

# delta_j (already relative to max |J_v|) below this is round-off
SPLIT_ROUNDOFF = 1e-10


@dataclass
class RunSummary:
    """Everything a run produced that ends up in run_metadata.json."""

    metadata: dict[str, Any] = field(default_factory=dict)
    checks: list[CheckResult] = field(default_factory=list)
    files: list[Path] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all_passed(self.checks)

    def failed(self) -> list[CheckResult]:
        return [c for c in self.checks if not c.passed]


class HHGPipeline:
    """potential -> bands -> pulse -> matels -> propagate -> gauge/observables."""

    def __init__(self, config: RunConfig):
        self.config = config
        self.threads = config.run.threads
        self.summary = RunSummary()
        self.drift_budget = ToleranceBudget(NORM_DRIFT_LIMIT, label="norm drift")

        self.spec: Optional[PotentialSpec] = None
        self.samples: Optional[PotentialSamples] = None
        self.grid: Optional[KGrid] = None
        self.bands: Optional[BandStructure] = None
        self.pulse: Optional[PulseSpec] = None
        self.times: list[GaugeTime] = []
        self.matels: Optional[MatrixElementSet] = None
        self.record: Optional[CurrentRecord] = None
        self.spectrum: Optional[Spectrum] = None

    def run(self, stage: str = "run", write: Optional[set[str]] = None) -> RunSummary:
        """Run up to the given stage and write the requested artifacts.

        write=None writes every artifact enabled in the output section.
        """
        if stage not in STAGES:
            raise ValueError(f"unknown stage '{stage}' (expected one of {STAGES})")
        last = STAGES.index(stage)
        steps = {0: 3, 1: 5, 2: 8}[last]
        start_time = time.time()
        logger.info("Starting bloch-hhg pipeline (stage %s)", stage)

        logger.info("Step 1/%d: Periodizing the cell potential", steps)
        self._prepare_potential()

        logger.info("Step 2/%d: Solving the Bloch eigenproblem", steps)
        self._solve_bands()

        if last >= 1:
            logger.info("Step 3/%d: Building pulse and gauge times", steps)
            self._prepare_pulse()
            logger.info("Step 4/%d: Precomputing matrix elements", steps)
            self._compute_matels()

        if last >= 2:
            logger.info("Step 5/%d: Propagating velocity-gauge coefficients", steps)
            history = propagate_ensemble(
                self.matels,
                self.pulse,
                self.config.ensemble(),
                [g.t for g in self.times],
                n_steps_per_cycle=self.config.run.n_steps_per_cycle,
                threads=self.threads,
                block_size=self.config.run.block_size,
                include_a_squared=self.config.run.include_a_squared,
                budget=self.drift_budget,
            )
            self.summary.metadata["norm_drift"] = self.drift_budget.worst

            logger.info("Step 6/%d: Transforming to length gauge, currents", steps)
            self.record = assemble_record(
                history,
                self.times,
                self.matels,
                self.pulse,
                self.config.ensemble(),
                threads=self.threads,
            )
            self._evaluate_observables()

            logger.info("Step 7/%d: Convergence check", steps)
            self._check_convergence()

        logger.info("Step %d/%d: Writing results", steps, steps)
        self._write(write)

        duration = time.time() - start_time
        self.summary.metadata["wall_time_s"] = duration
        logger.info("Pipeline completed in %.2f seconds", duration)
        self._write_metadata()
        return self.summary

    def _prepare_potential(self) -> None:
        pc = self.config.potential
        meta = self.summary.metadata
        spec = pc.to_spec()
        self.grid = KGrid(spec.a, self.config.grid.n_k)
        x = cell_grid(spec.a, self.config.grid.n_points)
        samples = periodize(spec, x)
        n0 = self.config.grid.valence_band
        oracle = make_gap_oracle(self.grid, self.config.grid.n_points, n0, self.threads)

        raw_gap = oracle(spec)
        meta["raw_gap_eV"] = from_internal(raw_gap, "eV")
        meta["potential_flat"] = samples.is_flat
        meta["image_count"] = samples.images
        calibrated = False
        if pc.calibrate:
            if samples.is_flat:
                logger.warning(
                    "Skipping gap calibration: periodized %s is constant, "
                    "no depth scale opens a gap",
                    spec.kind.value,
                )
            else:
                spec = calibrate_gap(
                    spec,
                    pc.target_gap,
                    oracle,
                    tolerance=to_internal(self.config.checks.gap_tolerance_eV, "eV"),
                )
                samples = periodize(spec, x)
                calibrated = True
        meta["calibrated"] = calibrated
        meta["depth_scale"] = spec.depth_scale
        self.spec = spec
        self.samples = samples

    def _solve_bands(self) -> None:
        self.bands = compute_band_structure(
            self.grid,
            self.samples,
            self.config.grid.n_bands,
            threads=self.threads,
            convention=self.config.run.phase_convention,
        )
        gap = self.bands.direct_gap(self.config.grid.valence_band)
        self.summary.metadata["gap_eV"] = from_internal(gap, "eV")
        logger.info("Direct gap %.6f eV", from_internal(gap, "eV"))

        pc = self.config.potential
        if pc.calibrate:
            self.summary.checks.append(
                at_most(
                    "gap_calibration",
                    abs(from_internal(gap, "eV") - pc.target_gap_eV),
                    self.config.checks.gap_tolerance_eV,
                )
            )

    def _prepare_pulse(self) -> None:
        meta = self.summary.metadata
        self.pulse = self.config.pulse.to_spec()
        excursion = peak_excursion(self.pulse, self.config.run.scan_samples_per_cycle)
        zone_edge = np.pi / self.grid.a
        meta["peak_excursion"] = excursion
        meta["peak_excursion_zone_fraction"] = excursion / zone_edge
        meta["max_field_GVm"] = from_internal(max_field(self.pulse), "GV/m")
        if excursion >= zone_edge:
            logger.warning(
                "Peak k excursion %.4f exceeds pi/a = %.4f: carriers cross the "
                "zone edge",
                excursion,
                zone_edge,
            )
        self.times = gauge_times(
            self.pulse, self.grid.dk, self.config.run.scan_samples_per_cycle
        )
        meta["gauge_times"] = len(self.times)
        meta["max_shift"] = max(abs(g.shift) for g in self.times)

    def _compute_matels(self) -> None:
        meta = self.summary.metadata
        checks = self.config.checks
        reach = max(abs(g.shift) for g in self.times)
        self.matels = compute_matrix_elements(
            self.bands, range(-reach, reach + 1), threads=self.threads
        )
        hermiticity = float(np.max(self.matels.hermiticity_defects()))
        same_k = self.matels.overlaps.block(0)
        identity = float(np.max(np.abs(same_k - np.eye(same_k.shape[-1]))))
        defects = self.matels.unitarity_defects("max")
        meta["hermiticity_defect"] = hermiticity
        meta["overlap_identity_defect"] = identity
        meta["unitarity_defects"] = {str(s): d for s, d in defects.items()}
        meta["band_velocity_defect"] = band_velocity_defect(
            self.bands, self.matels.momenta
        )
        self.summary.checks.append(
            at_most("momentum_hermiticity", hermiticity, checks.hermiticity_max)
        )
        self.summary.checks.append(
            at_most("overlap_identity", identity, checks.identity_max)
        )

    def _evaluate_observables(self) -> None:
        meta = self.summary.metadata
        checks = self.config.checks
        record = self.record
        deltas = gauge_discrepancy(record)
        meta.update(deltas)
        meta["imag_residue"] = record.imag_residue
        scale = max(float(np.max(np.abs(record.J_v))), 1.0)

        self.summary.checks.append(
            at_most("norm_drift", meta["norm_drift"], checks.norm_drift_max)
        )
        boundary = [0, len(record) - 1]
        self.summary.checks.append(
            at_most(
                "boundary_identity",
                float(np.max(np.abs(record.J_v[boundary] - record.J_l[boundary]))),
                1e-12 * scale,
            )
        )
        self.summary.checks.append(
            at_most("delta_J", deltas["delta_J"], checks.delta_J_max)
        )
        if deltas["delta_j"] <= SPLIT_ROUNDOFF:
            # no interband coupling: both split currents agree to round-off
            logger.info(
                "Skipping intraband_split: delta_j = %.3e is at round-off",
                deltas["delta_j"],
            )
        else:
            self.summary.checks.append(
                at_least(
                    "intraband_split",
                    deltas["delta_j"],
                    checks.split_ratio_min * deltas["delta_J"],
                )
            )
        self.summary.checks.append(
            at_most("imaginary_residue", record.imag_residue, 1e-10 * scale)
        )
        self.summary.checks.append(
            flagged(
                "norm_defect_bound",
                bool(np.all(record.norm_defect <= record.norm_bound + 1e-14)),
                "snapshot norm defect above its overlap bound",
            )
        )
        if record.shift_checks:
            failures = [c for c in record.shift_checks if not c.passed]
            self.summary.checks.append(
                flagged(
                    "acceleration_theorem",
                    not failures,
                    f"{len(failures)} gauge times: {failures[0].reason}"
                    if failures
                    else "",
                )
            )
            meta["min_adiabatic_fraction"] = min(
                c.adiabatic_fraction for c in record.shift_checks
            )

        if len(record) >= MIN_SPECTRUM_SAMPLES:
            self.spectrum = hhg_spectrum(
                record,
                self.pulse,
                gauge=self.config.output.spectrum_gauge,
                window=self.config.output.window,
            )
            meta["parseval_defect"] = self.spectrum.parseval_defect
            self.summary.checks.append(
                at_most(
                    "parseval", self.spectrum.parseval_defect, checks.parseval_max
                )
            )
        else:
            logger.warning(
                "Only %d gauge times, spectrum needs %d: skipped",
                len(record),
                MIN_SPECTRUM_SAMPLES,
            )

    def _check_convergence(self) -> None:
        if not self.config.run.check_convergence:
            logger.info("Convergence check disabled")
            return
        factor = richardson_factor(
            self.matels,
            self.pulse,
            self.config.ensemble(),
            self.config.run.n_steps_per_cycle,
            include_a_squared=self.config.run.include_a_squared,
        )
        self.summary.metadata["richardson_factor"] = factor
        self.summary.checks.append(
            within(
                "richardson",
                factor,
                self.config.checks.richardson_min,
                self.config.checks.richardson_max,
            )
        )

    def _wants(self, write: Optional[set[str]], name: str) -> bool:
        if write is not None:
            return name in write
        return bool(getattr(self.config.output, name, False))

    def _write(self, write: Optional[set[str]]) -> None:
        out = ensure_directories(self.config)
        files = self.summary.files
        if self.bands is not None and self._wants(write, "bands"):
            files.append(output.write_bands(out / "bands.csv", self.bands))
        if self.matels is not None and self._wants(write, "matels"):
            files.append(output.write_matels(out / "matels.csv", self.matels))
            files.append(output.write_overlaps(out / "overlaps.csv", self.matels))
        if self.record is not None:
            if self._wants(write, "currents"):
                files.append(output.write_currents(out / "currents.csv", self.record))
            if self._wants(write, "gauge_report"):
                files.append(
                    output.write_gauge_report(out / "gauge_report.csv", self.record)
                )
            if self._wants(write, "svg"):
                files.append(output.plot_currents(out / "currents.svg", self.record))
        if self.spectrum is not None:
            if self._wants(write, "spectrum"):
                files.append(output.write_spectrum(out / "spectrum.csv", self.spectrum))
            if self._wants(write, "svg"):
                files.append(output.plot_spectrum(out / "spectrum.svg", self.spectrum))

    def _write_metadata(self) -> None:
        meta = self.summary.metadata
        meta["config"] = self.config.model_dump(mode="json")
        meta.setdefault("richardson_factor", None)
        meta["checks"] = [c.as_dict() for c in self.summary.checks]
        meta["passed"] = self.summary.passed
        out = ensure_directories(self.config)
        self.summary.files.append(
            output.write_metadata(out / "run_metadata.json", meta)
        )


def run_pipeline(
    config: RunConfig, stage: str = "run", write: Optional[set[str]] = None
) -> RunSummary:
    return HHGPipeline(config).run(stage, write)
