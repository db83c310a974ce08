import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from qbattery import (
    BatteryKind,
    BatteryModel,
    QubitState,
    ladder_amplitude,
    qubit_density,
    transition_amplitudes,
    validate_state,
)


class TestBatteryModel:
    def test_constructors(self):
        osc = BatteryModel.oscillator(250)
        assert osc.kind is BatteryKind.OSCILLATOR and osc.dim == 250 and osc.capacity == 249
        spin = BatteryModel.spin(99 / 2)
        assert spin.dim == 100 and spin.spin_j == 49.5
        uni = BatteryModel.uniform_ladder(7)
        assert uni.dim == 7

    def test_rejects_bad_dimensions(self):
        with pytest.raises(ValueError):
            BatteryModel.oscillator(1)
        with pytest.raises(ValueError):
            BatteryModel(BatteryKind.SPIN, 10, spin_j=5.0)      # needs dim = 11
        with pytest.raises(ValueError):
            BatteryModel(BatteryKind.SPIN, 10, spin_j=None)
        with pytest.raises(ValueError):
            BatteryModel(BatteryKind.OSCILLATOR, 10, spin_j=2.0)
        with pytest.raises(ValueError):
            BatteryModel.spin(5.3)
        with pytest.raises(ValueError):
            BatteryModel.oscillator(10, energy=0.0)

    def test_level_energies_relative_to_ground(self):
        spin = BatteryModel.spin(1.5, energy=2.0)
        assert np.allclose(spin.level_energies, [0.0, 2.0, 4.0, 6.0])


class TestLadderAmplitude:
    def test_oscillator_first_step(self):
        assert ladder_amplitude(BatteryModel.oscillator(5), 1) == 1.0

    def test_oscillator_is_sqrt_n(self):
        model = BatteryModel.oscillator(9)
        for n in range(1, 9):
            assert ladder_amplitude(model, n) == pytest.approx(math.sqrt(n), abs=0.0)

    def test_spin_bottom_transition(self):
        # raising from the lowest level: sqrt(j(j+1) - (-j)(-j+1)) = sqrt(2j)
        j = 99 / 2
        model = BatteryModel.spin(j)
        expected = math.sqrt(j * (j + 1) - (-j) * (-j + 1))
        assert expected == pytest.approx(math.sqrt(99), rel=1e-15)
        assert ladder_amplitude(model, 1) == pytest.approx(expected, rel=1e-12)
        assert ladder_amplitude(model, 1) == pytest.approx(9.9499, abs=1e-4)

    def test_uniform_ladder_is_one(self):
        model = BatteryModel.uniform_ladder(11)
        assert all(ladder_amplitude(model, n) == 1.0 for n in range(1, 11))

    def test_out_of_range(self):
        model = BatteryModel.oscillator(5)
        for n in (0, 5, 6, -1):
            with pytest.raises(ValueError):
                ladder_amplitude(model, n)

    @given(two_j=st.integers(min_value=1, max_value=60))
    def test_spin_symmetric_about_midpoint(self, two_j):
        model = BatteryModel.spin(two_j / 2.0)
        d = model.dim
        f = transition_amplitudes(model)
        assert np.allclose(f, f[::-1], rtol=0, atol=1e-12)
        assert np.all(f > 0)
        assert np.argmax(f) in (d // 2 - 1, (d - 1) // 2 - 0)  # midpoint transition(s)

    def test_vector_matches_scalar(self, any_model):
        f = transition_amplitudes(any_model)
        for n in range(1, any_model.dim):
            assert f[n - 1] == pytest.approx(ladder_amplitude(any_model, n), rel=1e-15)


class TestQubitState:
    def test_pure_ground(self):
        rho = qubit_density(QubitState(q=1.0))
        assert np.allclose(rho, [[1, 0], [0, 0]])

    def test_plus_state(self):
        rho = qubit_density(QubitState(q=0.5, c=1.0, alpha=0.0))
        assert np.allclose(rho, 0.5 * np.ones((2, 2)))

    def test_partial_coherence_with_phase(self):
        rho = qubit_density(QubitState(q=0.5, c=0.5, alpha=math.pi / 2))
        assert np.allclose(np.diag(rho), [0.5, 0.5])
        assert rho[0, 1] == pytest.approx(-0.25j, abs=1e-15)
        assert rho[1, 0] == pytest.approx(0.25j, abs=1e-15)

    def test_range_validation(self):
        for bad in (dict(q=-0.1), dict(q=1.1), dict(q=0.5, c=-0.2), dict(q=0.5, c=2.0),
                    dict(q=0.5, alpha=-1.0), dict(q=0.5, alpha=2 * math.pi)):
            with pytest.raises(ValueError):
                QubitState(**bad)

    def test_positive_semidefinite_on_grid(self):
        qs = np.linspace(0, 1, 20)
        cs = np.linspace(0, 1, 20)
        alphas = np.linspace(0, 2 * math.pi, 20, endpoint=False)
        mats = np.empty((20, 20, 20, 2, 2), dtype=complex)
        for i, q in enumerate(qs):
            for k, c in enumerate(cs):
                for l, a in enumerate(alphas):
                    mats[i, k, l] = qubit_density(QubitState(q, c, a))
        eigs = np.linalg.eigvalsh(mats.reshape(-1, 2, 2))
        assert eigs.min() >= -1e-12
        traces = np.einsum("...ii->...", mats.reshape(-1, 2, 2)).real
        assert np.allclose(traces, 1.0, atol=1e-14)


class TestValidateState:
    def test_maximally_mixed_passes(self):
        diag = validate_state(np.eye(6) / 6.0)
        assert diag.ok

    def test_trace_violation_flagged(self):
        rho = np.eye(4, dtype=complex) / 4.0
        rho[0, 0] += 1e-6
        diag = validate_state(rho)
        assert not diag.ok and diag.trace_error == pytest.approx(1e-6, rel=1e-3)

    def test_population_vector(self):
        diag = validate_state(np.array([0.5, 0.5]))
        assert diag.ok and diag.min_eigenvalue == 0.5

    def test_negative_eigenvalue_flagged(self):
        rho = np.diag([1.1, -0.1]).astype(complex)
        assert not validate_state(rho).ok

    def test_non_square_rejected(self):
        with pytest.raises(ValueError):
            validate_state(np.zeros((2, 3)))
