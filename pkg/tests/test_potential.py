"""Tests for model potentials, periodization and gap calibration."""

import logging

import numpy as np
import pytest
from pydantic import ValidationError

from bloch_hhg.errors import CalibrationError, PotentialError
from bloch_hhg.physics.potential import (
    PotentialKind,
    PotentialSpec,
    calibrate_gap,
    cell_grid,
    eval_cell_v1,
    eval_cell_v2,
    image_cutoff,
    periodize,
)
from bloch_hhg.units import to_internal


class TestCellPotentials:
    """Test the analytic single-cell potentials."""

    def test_cell_grid(self):
        """Test the grid starts at -a/2 and stops short of a/2."""
        grid = cell_grid(2.0, 8)
        assert grid[0] == -1.0
        assert grid[1] - grid[0] == pytest.approx(0.25)
        assert grid[-1] < 1.0

    def test_v2_value_at_origin(self):
        """Test V2(0) = -depth (1 + tanh x0)^2."""
        spec = PotentialSpec(kind=PotentialKind.V2)
        expected = -spec.depth * (1.0 + np.tanh(spec.x0)) ** 2
        assert eval_cell_v2(np.array([0.0]), spec)[0] == pytest.approx(expected)

    def test_v2_is_even(self):
        """Test V2(x) = V2(-x)."""
        spec = PotentialSpec(kind=PotentialKind.V2)
        x = np.linspace(0.1, 5.0, 17)
        np.testing.assert_allclose(eval_cell_v2(x, spec), eval_cell_v2(-x, spec))

    def test_v1_zero_outside_window(self):
        """Test a narrow V1 window vanishes far from both centres."""
        spec = PotentialSpec(kind=PotentialKind.V1, width_cells=0.1)
        far = np.array([0.45 * spec.a])
        assert eval_cell_v1(far, spec)[0] == 0.0
        at_center = np.array([spec.centers[0] * spec.a])
        assert eval_cell_v1(at_center, spec)[0] == pytest.approx(-spec.depth)

    def test_v1_centre_outside_cell(self):
        """Test V1 centres must lie inside the cell."""
        with pytest.raises(ValidationError):
            PotentialSpec(kind=PotentialKind.V1, centers=(-0.7, 0.1))

    def test_depth_scale_multiplies(self):
        """Test strength is depth times depth_scale."""
        spec = PotentialSpec(kind=PotentialKind.V2, depth_scale=2.0)
        assert spec.strength == pytest.approx(2.0 * spec.depth)


class TestPeriodize:
    """Test lattice-image sums on the cell grid."""

    def test_v2_even_on_grid(self):
        """Test the periodized V2 satisfies V(x_m) = V(x_{N-m})."""
        spec = PotentialSpec(kind=PotentialKind.V2)
        samples = periodize(spec, cell_grid(spec.a, 32))
        values = samples.values
        np.testing.assert_allclose(values[1:], values[1:][::-1], atol=1e-12)
        assert samples.images >= 1
        assert not samples.is_flat

    def test_v2_image_tail_converged(self):
        """Test one more image changes nothing at round-off."""
        spec = PotentialSpec(kind=PotentialKind.V2)
        n = image_cutoff(spec)
        x = cell_grid(spec.a, 16)
        tail = eval_cell_v2(x - (n + 1) * spec.a, spec) + eval_cell_v2(
            x + (n + 1) * spec.a, spec
        )
        assert np.max(np.abs(tail)) < 1e-10 * spec.depth

    def test_free_is_zero(self):
        """Test the free potential has no images and no values."""
        spec = PotentialSpec(kind=PotentialKind.FREE)
        samples = periodize(spec, cell_grid(spec.a, 16))
        assert samples.images == 0
        assert np.all(samples.values == 0.0)

    def test_literal_v1_is_flat(self, caplog):
        """Test the wide default V1 window periodizes to a constant."""
        spec = PotentialSpec(kind=PotentialKind.V1)
        with caplog.at_level(logging.WARNING, logger="bloch_hhg.physics.potential"):
            samples = periodize(spec, cell_grid(spec.a, 64))
        assert samples.is_flat
        assert "constant" in caplog.text

    def test_narrow_v1_is_not_flat(self):
        """Test a window shorter than a cell leaves structure."""
        spec = PotentialSpec(kind=PotentialKind.V1, width_cells=0.4)
        samples = periodize(spec, cell_grid(spec.a, 64))
        assert not samples.is_flat

    def test_grid_too_small(self):
        """Test fewer than 8 grid points is rejected."""
        spec = PotentialSpec(kind=PotentialKind.V2)
        with pytest.raises(PotentialError):
            periodize(spec, cell_grid(spec.a, 4))


class TestCalibrateGap:
    """Test depth-scale bisection against a stand-in gap function."""

    def test_bisects_to_target(self):
        """Test a linear gap is hit within tolerance."""
        spec = PotentialSpec(kind=PotentialKind.V2)
        tolerance = to_internal(1e-3, "eV")
        calibrated = calibrate_gap(spec, 0.15, lambda s: 0.1 * s.depth_scale)
        assert abs(0.1 * calibrated.depth_scale - 0.15) <= tolerance
        assert calibrated.kind == spec.kind
        assert calibrated.depth == spec.depth

    def test_already_on_target(self):
        """Test a spec already on target comes back unchanged."""
        spec = PotentialSpec(kind=PotentialKind.V2)
        assert calibrate_gap(spec, 0.1, lambda s: 0.1 * s.depth_scale) is spec

    def test_not_bracketed(self):
        """Test a gap that never opens raises CalibrationError."""
        spec = PotentialSpec(kind=PotentialKind.V2)
        with pytest.raises(CalibrationError) as excinfo:
            calibrate_gap(spec, 0.1, lambda s: 0.0)
        assert "not bracketed" in str(excinfo.value)

    def test_target_must_be_positive(self):
        """Test a non-positive target is rejected."""
        spec = PotentialSpec(kind=PotentialKind.V2)
        with pytest.raises(CalibrationError):
            calibrate_gap(spec, 0.0, lambda s: 0.1)

    def test_calibration_error_is_potential_error(self):
        """Test calibration failures carry the potential tag."""
        assert str(CalibrationError("x")).startswith("[potential]")
