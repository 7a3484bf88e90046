"""Tests for momentum matrices and overlap blocks."""

import numpy as np
import pytest

from bloch_hhg.errors import GaugeError
from bloch_hhg.physics.bloch import KGrid, compute_band_structure
from bloch_hhg.physics.matels import (
    OverlapTensor,
    band_velocity_defect,
    compute_matrix_elements,
    hermiticity_defect,
    hext_v_matrix,
    momentum_matrix,
    overlap_matrix,
    unitarity_defect,
)


class TestMomentumMatrix:
    """Test P_{nn'}(k) in the Bloch basis."""

    def test_hermitian(self, v2_bands):
        """Test every P(k) is Hermitian to round-off."""
        for m in range(v2_bands.grid.M):
            assert hermiticity_defect(momentum_matrix(v2_bands, m)) <= 1e-10

    def test_free_electron_diagonal(self, free_bands):
        """Test free-electron P is diagonal with entries hbar (k + G)."""
        m = 3
        P = momentum_matrix(free_bands, m)
        off = P - np.diag(np.diag(P))
        assert np.max(np.abs(off)) < 1e-12
        q = free_bands.basis.momenta(free_bands.grid.points[m])
        expected = q[np.argsort(q**2)][: free_bands.n_bands]
        np.testing.assert_allclose(np.diag(P).real, expected, atol=1e-12)

    def test_zero_velocity_at_gamma(self, v2_bands):
        """Test P_nn(0) vanishes for the lowest bands of an even potential."""
        P = momentum_matrix(v2_bands, v2_bands.grid.zero_index)
        np.testing.assert_allclose(np.diag(P)[:4], 0.0, atol=1e-10)

    def test_band_velocity_converges(self, v2_spec, v2_samples, v2_bands):
        """Test P_nn/m approaches dE/dk as the k-grid is refined."""
        coarse_bands = compute_band_structure(v2_bands.grid, v2_samples, 2)
        fine_bands = compute_band_structure(KGrid(v2_spec.a, 33), v2_samples, 2)

        def defect(bands):
            momenta = np.stack(
                [momentum_matrix(bands, m) for m in range(bands.grid.M)]
            )
            return band_velocity_defect(bands, momenta)

        coarse, fine = defect(coarse_bands), defect(fine_bands)
        assert fine < coarse / 2


class TestInteraction:
    """Test the velocity-gauge interaction matrix."""

    def test_zero_field(self, v2_bands):
        """Test A = 0 gives no interaction."""
        P = momentum_matrix(v2_bands, 4)
        assert np.all(hext_v_matrix(P, 0.0) == 0.0)

    def test_linear_and_diamagnetic_terms(self, v2_bands):
        """Test -e0/m P A plus e0^2 A^2 / 2m on the diagonal."""
        P = momentum_matrix(v2_bands, 4)
        A = 0.05
        with_a2 = hext_v_matrix(P, A)
        without = hext_v_matrix(P, A, include_a_squared=False)
        np.testing.assert_allclose(without, A * P)
        np.testing.assert_allclose(with_a2 - without, 0.5 * A**2 * np.eye(8))
        assert hermiticity_defect(with_a2) <= 1e-12


class TestOverlaps:
    """Test overlap matrices between k-points."""

    def test_same_k_is_identity(self, v2_bands):
        """Test S^{k,k} = I."""
        S = overlap_matrix(v2_bands, 5, 5)
        np.testing.assert_allclose(S, np.eye(8), atol=1e-12)

    def test_adjoint_swaps_arguments(self, v2_bands):
        """Test S^{k_i,k_j} = (S^{k_j,k_i})^H."""
        np.testing.assert_allclose(
            overlap_matrix(v2_bands, 3, 6), overlap_matrix(v2_bands, 6, 3).conj().T
        )

    def test_free_electron_overlaps_are_permutation_like(self, free_bands):
        """Test plane-wave overlaps are 0 or 1 in magnitude."""
        magnitudes = np.abs(overlap_matrix(free_bands, 3, 5))
        near = np.minimum(magnitudes, np.abs(magnitudes - 1.0))
        assert np.max(near) < 1e-10

    def test_unitarity_defect_norms(self):
        """Test both defect norms on a contraction."""
        S = np.diag([1.0, 0.9])
        assert unitarity_defect(np.eye(3)) == 0.0
        assert unitarity_defect(S, "max") == pytest.approx(0.19)
        assert unitarity_defect(S, "spectral") == pytest.approx(0.19)
        with pytest.raises(ValueError):
            unitarity_defect(S, "frobenius")

    def test_complete_basis_is_unitary(self, v2_matels_complete):
        """Test every shift block is unitary when N_b = N."""
        for shift, defect in v2_matels_complete.unitarity_defects("max").items():
            assert defect <= 1e-10, shift

    def test_truncated_basis_is_not_unitary(self, v2_matels):
        """Test eight bands leave a visible defect at the largest shift."""
        reach = v2_matels.overlaps.max_shift
        assert reach >= 1
        assert v2_matels.overlaps.defect(reach) > 1e-12


class TestMatrixElementSet:
    """Test the precomputed matrix-element bundle."""

    def test_shift_zero_always_present(self, v2_bands):
        """Test shift 0 is added to any requested range."""
        matels = compute_matrix_elements(v2_bands, [2])
        assert matels.overlaps.shifts == [0, 2]
        assert matels.momenta.shape == (17, 8, 8)
        assert matels.overlaps.block(2).shape == (16, 8, 8)

    def test_block_matches_overlap_matrix(self, v2_bands, v2_matels):
        """Test block(s)[i0] is the overlap of k0 + s dk with k0."""
        grid = v2_bands.grid
        shift = v2_matels.overlaps.max_shift
        for i0 in (0, 7, 15):
            target, winding = grid.shifted_index(i0, shift)
            np.testing.assert_allclose(
                v2_matels.overlaps.block(shift)[i0],
                overlap_matrix(v2_bands, int(target), i0, int(winding)),
                atol=1e-13,
            )

    def test_missing_shift(self, v2_matels):
        """Test asking beyond the precomputed range raises GaugeError."""
        with pytest.raises(GaugeError) as excinfo:
            v2_matels.overlaps.block(v2_matels.overlaps.max_shift + 1)
        assert "shift range" in str(excinfo.value)

    def test_empty_tensor(self):
        """Test an empty tensor has no reach."""
        assert OverlapTensor({}).max_shift == 0

    def test_thread_count_does_not_matter(self, v2_bands, v2_matels):
        """Test threaded precomputation is bit-identical."""
        shifts = v2_matels.overlaps.shifts
        threaded = compute_matrix_elements(v2_bands, shifts, threads=3)
        np.testing.assert_array_equal(threaded.momenta, v2_matels.momenta)
        for s in shifts:
            np.testing.assert_array_equal(
                threaded.overlaps.block(s), v2_matels.overlaps.block(s)
            )
