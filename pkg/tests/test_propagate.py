"""Tests for velocity-gauge propagation."""

import numpy as np
import pytest

from bloch_hhg.budget import ToleranceBudget
from bloch_hhg.errors import PropagationError
from bloch_hhg.physics.bloch import compute_band_structure
from bloch_hhg.physics.matels import compute_matrix_elements
from bloch_hhg.physics.propagate import (
    CoefficientState,
    EnsembleMode,
    EnsembleSpec,
    Propagator,
    block_rhs,
    init_state,
    propagate_ensemble,
    propagate_k,
    rhs,
    richardson_factor,
    step_grid,
)
from bloch_hhg.physics.pulse import PulseSpec


@pytest.fixture(scope="module")
def samples(short_pulse):
    return np.linspace(0.0, short_pulse.duration, 9)


class TestEnsembleSpec:
    """Test which k-points are occupied."""

    def test_single_k_is_gamma(self, desk_grid):
        """Test single_k occupies k = 0 only."""
        spec = EnsembleSpec()
        assert spec.k_indices(desk_grid) == [desk_grid.zero_index]
        assert spec.occupied(desk_grid) == 1

    def test_full_band_skips_duplicate_edge(self, desk_grid):
        """Test full_band occupies the M - 1 unique k-points."""
        spec = EnsembleSpec(mode=EnsembleMode.FULL_BAND)
        assert spec.k_indices(desk_grid) == list(range(16))


class TestInitialState:
    """Test initial coefficients."""

    def test_pure_band_state(self):
        """Test c = e_{n0} with unit norm and a pure density matrix."""
        state = init_state(0.0, 2, 4)
        np.testing.assert_array_equal(state.c, [0, 1, 0, 0])
        assert state.norm == 1.0
        rho = state.density_matrix()
        np.testing.assert_allclose(rho @ rho, rho)

    def test_band_out_of_range(self):
        """Test n0 outside 1..N_b is refused."""
        with pytest.raises(PropagationError):
            init_state(0.0, 5, 4)


class TestEquationOfMotion:
    """Test the right-hand side and the step grid."""

    def test_rhs_without_field(self, v2_matels, short_pulse):
        """Test dc/dt = -i E c while A = 0."""
        c = np.ones(8, dtype=complex)
        expected = -1j * v2_matels.energies[8] * c
        np.testing.assert_allclose(rhs(c, 0.0, 8, v2_matels, short_pulse), expected)

    def test_rhs_is_anti_hermitian(self, v2_matels, short_pulse):
        """Test the generator keeps the norm: Re <c, dc/dt> = 0."""
        rng = np.random.default_rng(1)
        c = rng.normal(size=8) + 1j * rng.normal(size=8)
        t = 0.37 * short_pulse.duration
        derivative = rhs(c, t, 5, v2_matels, short_pulse)
        assert np.vdot(c, derivative).real == pytest.approx(0.0, abs=1e-12)

    def test_block_rows_match_single_rhs(self, v2_matels, short_pulse):
        """Test each row of a k block gets the single-k derivative."""
        rng = np.random.default_rng(3)
        indices = [2, 8, 13]
        c = rng.normal(size=(3, 8)) + 1j * rng.normal(size=(3, 8))
        t = 0.41 * short_pulse.duration
        block = block_rhs(
            c,
            t,
            v2_matels.energies[indices],
            v2_matels.momenta[indices],
            short_pulse,
        )
        for row, index in enumerate(indices):
            np.testing.assert_allclose(
                block[row], rhs(c[row], t, index, v2_matels, short_pulse), atol=1e-12
            )

    def test_step_grid_lands_on_samples(self, short_pulse, samples):
        """Test every sample time is a node and nodes increase."""
        nodes = step_grid(short_pulse, 64, samples)
        assert set(samples) <= set(nodes)
        assert np.all(np.diff(nodes) > 0)
        assert nodes[0] == 0.0 and nodes[-1] == short_pulse.duration


class TestPropagator:
    """Test RK4 propagation of k blocks."""

    def test_field_free_phase(self, v2_matels):
        """Test a zero field only advances the phase of the occupied band."""
        pulse = PulseSpec.from_lab(duration_fs=30.0, peak_field_GVm=0.0)
        times = np.linspace(0.0, pulse.duration, 5)
        record, drift = Propagator(v2_matels, pulse).run([8], 1, times)
        E = v2_matels.energies[8, 0]
        np.testing.assert_allclose(
            record[:, 0, 0], np.exp(-1j * E * times), atol=1e-12
        )
        assert np.all(record[:, 0, 1:] == 0.0)
        assert drift == 0.0

    def test_norm_conserved(self, v2_matels, short_pulse, samples):
        """Test the norm drift stays below 1e-8 at 2048 steps per cycle."""
        record, drift = Propagator(v2_matels, short_pulse).run([8, 3], 1, samples)
        norms = np.sum(np.abs(record) ** 2, axis=2)
        assert np.max(np.abs(norms - 1.0)) <= 1e-8
        assert drift <= 1e-8

    def test_field_excites(self, v2_matels, short_pulse, samples):
        """Test the pulse moves weight out of the initial band."""
        record, _ = Propagator(v2_matels, short_pulse).run([8], 1, samples)
        assert np.max(np.abs(record[:, 0, 1:])) > 1e-6

    def test_a_squared_is_a_global_phase(self, v2_matels, short_pulse, samples):
        """Test dropping the diamagnetic term leaves populations unchanged."""
        with_a2, _ = Propagator(v2_matels, short_pulse).run([8], 1, samples)
        without, _ = Propagator(v2_matels, short_pulse, include_a_squared=False).run(
            [8], 1, samples
        )
        np.testing.assert_allclose(
            np.abs(with_a2) ** 2, np.abs(without) ** 2, atol=1e-9
        )

    def test_unstable_step(self, v2_matels, short_pulse, samples):
        """Test too few steps per cycle is refused before propagating."""
        with pytest.raises(PropagationError) as excinfo:
            Propagator(v2_matels, short_pulse, n_steps_per_cycle=16).run(
                [8], 1, samples
            )
        assert "n_steps_per_cycle" in str(excinfo.value)

    def test_unordered_samples(self, v2_matels, short_pulse):
        """Test sample times must increase."""
        with pytest.raises(PropagationError):
            Propagator(v2_matels, short_pulse).run([8], 1, [0.0, 10.0, 5.0])

    def test_samples_outside_pulse(self, v2_matels, short_pulse):
        """Test sample times past T are refused."""
        with pytest.raises(PropagationError):
            Propagator(v2_matels, short_pulse).run(
                [8], 1, [0.0, short_pulse.duration + 1.0]
            )

    def test_propagate_k(self, v2_matels, short_pulse, samples):
        """Test the single-k helper matches a one-row block."""
        states = propagate_k(8, EnsembleSpec(), short_pulse, v2_matels, samples)
        record, _ = Propagator(v2_matels, short_pulse).run([8], 1, samples)
        assert len(states) == len(samples)
        assert isinstance(states[0], CoefficientState)
        assert states[0].k0 == 0.0
        np.testing.assert_array_equal(states[-1].c, record[-1, 0])


class TestEnsemble:
    """Test blocked, threaded ensemble propagation."""

    def test_blocking_and_threads_do_not_matter(
        self, v2_matels, short_pulse, samples
    ):
        """Test results are identical for any block size and thread count."""
        spec = EnsembleSpec(mode=EnsembleMode.FULL_BAND)
        serial = propagate_ensemble(
            v2_matels, short_pulse, spec, samples, threads=1, block_size=16
        )
        blocked = propagate_ensemble(
            v2_matels, short_pulse, spec, samples, threads=3, block_size=4
        )
        assert serial.k_indices == blocked.k_indices
        np.testing.assert_array_equal(serial.coefficients, blocked.coefficients)
        assert serial.coefficients.shape == (len(samples), 16, 8)

    def test_budget_records_drift(self, v2_matels, short_pulse, samples):
        """Test the shared budget sees the worst block drift."""
        budget = ToleranceBudget(1e-6)
        history = propagate_ensemble(
            v2_matels,
            short_pulse,
            EnsembleSpec(),
            samples,
            budget=budget,
        )
        assert budget.count == 1
        assert budget.worst == history.worst_drift
        np.testing.assert_allclose(
            np.sum(history.populations(), axis=2), 1.0, atol=1e-8
        )


class TestRichardson:
    """Test the step-halving convergence factor."""

    def test_fourth_order(self, v2_samples, desk_grid, short_pulse):
        """Test halving the step shrinks the error about sixteenfold."""
        bands = compute_band_structure(desk_grid, v2_samples, 4)
        matels = compute_matrix_elements(bands, [0])
        factor = richardson_factor(
            matels, short_pulse, EnsembleSpec(), n_steps_per_cycle=1024
        )
        assert 10.0 <= factor <= 22.0
