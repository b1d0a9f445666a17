"""
Tests for the four-level atom model: Hamiltonian, master equation,
steady state, Doppler averaging and the susceptibility.
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from atomic_beamformer.core.atom import (
    DensityMatrix,
    Environment,
    LinearSusceptibility,
    SusceptibilityCurve,
    SusceptibilityPoint,
    build_hamiltonian,
    coherence_ode_reference,
    doppler_average_rho12,
    lindblad_rhs,
    liouvillian,
    operating_point,
    steady_state,
    susceptibility,
    susceptibility_slope,
)
from atomic_beamformer.core.errors import NonConverged, SingularSystem

TWO_PI = 2.0 * math.pi


def _random_state(rng):
    a = rng.normal(size=(4, 4)) + 1j * rng.normal(size=(4, 4))
    rho = a @ a.conj().T
    return DensityMatrix(rho / np.trace(rho))


class TestHamiltonian:
    """Test the rotating-frame Hamiltonian."""

    def test_all_couplings_off(self, broad_system):
        """No fields and no detunings give the zero matrix."""
        system = replace(broad_system, probe_rabi=0.0, coupling_rabi=0.0)
        np.testing.assert_array_equal(build_hamiltonian(system, 0.0), np.zeros((4, 4)))

    def test_hermitian(self, broad_system):
        """The Hamiltonian is Hermitian for a complex RF Rabi frequency."""
        h = build_hamiltonian(broad_system, 1.0 + 2.0j)
        np.testing.assert_array_equal(h, h.conj().T)

    def test_diagonal_detunings(self, broad_system):
        """Diagonal entries carry the cumulative detunings."""
        system = replace(broad_system, delta_p=1.5e6, delta_c=-2.0e5, delta_l=3.0e4)
        h = build_hamiltonian(system, 0.0)
        assert h[0, 0] == 0.0
        assert h[1, 1] == pytest.approx(-1.5e6)
        assert h[2, 2] == pytest.approx(-1.5e6 + 2.0e5)
        assert h[3, 3] == pytest.approx(-1.5e6 + 2.0e5 - 3.0e4)

    def test_rf_coupling_entries(self, broad_system):
        """The RF coupling sits on the 3-4 transition as half the Rabi frequency."""
        h = build_hamiltonian(broad_system, 4.0 - 2.0j)
        assert h[3, 2] == pytest.approx(2.0 - 1.0j)
        assert h[2, 3] == pytest.approx(2.0 + 1.0j)


class TestLindblad:
    """Test the master-equation right-hand side."""

    def test_ground_state_stationary(self, broad_system):
        """The ground state does not evolve without fields."""
        system = replace(broad_system, probe_rabi=0.0, coupling_rabi=0.0)
        rho = DensityMatrix(np.diag([1.0, 0.0, 0.0, 0.0]).astype(complex))
        np.testing.assert_array_equal(lindblad_rhs(system, rho, 0.0), np.zeros((4, 4)))

    def test_trace_preserved(self, broad_system):
        """The trace of the derivative vanishes for random valid states."""
        rng = np.random.default_rng(7)
        scale = max(broad_system.gamma2, broad_system.probe_rabi)
        rabi = TWO_PI * 3e6 * (1 + 0.5j)
        for _ in range(100):
            derivative = lindblad_rhs(broad_system, _random_state(rng), rabi)
            assert abs(np.trace(derivative)) < 1e-12 * scale

    def test_excited_state_decay(self, broad_system):
        """Population in level 2 decays into the ground state at gamma2."""
        system = replace(broad_system, probe_rabi=0.0, coupling_rabi=0.0)
        rho = DensityMatrix(np.diag([0.0, 1.0, 0.0, 0.0]).astype(complex))
        derivative = lindblad_rhs(system, rho, 0.0)
        assert derivative[0, 0].real == pytest.approx(system.gamma2)
        assert derivative[1, 1].real == pytest.approx(-system.gamma2)

    def test_liouvillian_matches_rhs(self, broad_system):
        """The vectorized generator reproduces the matrix form row-major."""
        rho = _random_state(np.random.default_rng(3))
        rabi = TWO_PI * 2e6 * np.exp(0.3j)
        expected = lindblad_rhs(broad_system, rho, rabi)
        actual = (liouvillian(broad_system, rabi) @ rho.data.reshape(16)).reshape(4, 4)
        np.testing.assert_allclose(actual, expected, rtol=0, atol=1e-6)


class TestSteadyState:
    """Test the direct steady-state solve."""

    def test_dark_ground_state(self, broad_system):
        """Without fields everything relaxes to the ground state."""
        system = replace(broad_system, probe_rabi=0.0, coupling_rabi=0.0)
        rho = steady_state(system, 0.0)
        np.testing.assert_allclose(rho.data, np.diag([1.0, 0.0, 0.0, 0.0]), atol=1e-12)

    def test_residual(self, broad_system):
        """The steady state makes the right-hand side vanish."""
        rabi = TWO_PI * 1e6
        rho = steady_state(broad_system, rabi)
        residual = np.max(np.abs(lindblad_rhs(broad_system, rho, rabi)))
        assert residual < 1e-10 * max(broad_system.gamma2, broad_system.probe_rabi)

    def test_valid_density_matrix(self, broad_system):
        """Trace, Hermiticity and positivity hold."""
        rho = steady_state(broad_system, TWO_PI * 1e6)
        assert rho.is_valid()
        assert rho.trace == pytest.approx(1.0, abs=1e-12)

    def test_absorption_sign(self, broad_system):
        """The probe coherence has a negative imaginary part on resonance."""
        rho = steady_state(broad_system, TWO_PI * 1e6)
        assert rho.rho12.imag < 0

    def test_matches_time_integration(self, broad_system):
        """Two-level reduction agrees with long-time integration."""
        system = replace(broad_system, coupling_rabi=0.0)
        final = coherence_ode_reference(system, 0.0, 100.0 / system.gamma2)
        rho = steady_state(system, 0.0)
        assert abs(final[1, 0] - rho.rho12) < 1e-8

    def test_phase_independence(self, broad_system):
        """The coherence magnitude depends on the RF amplitude only."""
        amplitude = TWO_PI * 1.5e6
        reference = abs(steady_state(broad_system, amplitude).rho12)
        rotated = abs(steady_state(broad_system, amplitude * np.exp(0.7j)).rho12)
        assert abs(reference - rotated) < 1e-10

    def test_random_systems(self, broad_system):
        """Residual, validity and phase independence hold over random ladders."""
        rng = np.random.default_rng(2024)
        for _ in range(1000):
            rates = TWO_PI * 10.0 ** rng.uniform(5.0, 7.0, size=5)
            detunings = TWO_PI * rng.uniform(-5e6, 5e6, size=3)
            system = replace(
                broad_system,
                gamma2=rates[0],
                gamma3=rates[1],
                gamma4=rates[2],
                probe_rabi=rates[3],
                coupling_rabi=rates[4],
                delta_p=detunings[0],
                delta_c=detunings[1],
                delta_l=detunings[2],
            )
            amplitude = TWO_PI * 10.0 ** rng.uniform(4.0, 7.0)
            rabi = amplitude * np.exp(1j * rng.uniform(0.0, TWO_PI))
            scale = max(np.max(rates), np.max(np.abs(detunings)), amplitude)

            rho = steady_state(system, rabi)
            residual = np.max(np.abs(lindblad_rhs(system, rho, rabi)))
            assert residual < 1e-10 * scale
            assert rho.is_valid()
            assert rho.trace == pytest.approx(1.0, abs=1e-10)
            assert rho.hermiticity_error() < 1e-10
            assert np.min(rho.eigenvalues()) > -1e-10
            real_rabi = abs(steady_state(system, amplitude).rho12)
            assert abs(abs(rho.rho12) - real_rabi) < 1e-9

    def test_zero_decay_is_singular(self, broad_system):
        """No decay at all leaves the steady state undetermined."""
        system = replace(broad_system, gamma2=0.0, gamma3=0.0, gamma4=0.0)
        with pytest.raises(SingularSystem):
            steady_state(system, TWO_PI * 1e6)


class TestDopplerAverage:
    """Test the thermal velocity average."""

    def test_weights_normalized(self, cold_env, broad_system):
        """Quadrature weights average a constant to itself."""
        for method in ("gauss-hermite", "trapezoid"):
            env = replace(cold_env, doppler_method=method)
            _, weights = env.velocity_nodes(broad_system.atom_mass)
            assert np.sum(weights) == pytest.approx(1.0, abs=1e-12)

    def test_zero_temperature_limit(self, broad_system):
        """A vanishing velocity spread reproduces the resting atom."""
        env = Environment(temperature=1e-10)
        rabi = TWO_PI * 1e6
        averaged = doppler_average_rho12(broad_system, env, rabi)
        resting = steady_state(broad_system, rabi).rho12
        assert abs(averaged - resting) < 1e-6 * abs(resting)

    def test_node_convergence(self, broad_system, cold_env):
        """Doubling the node count changes the average negligibly."""
        rabi = TWO_PI * 1e6
        coarse = doppler_average_rho12(broad_system, cold_env, rabi)
        finer = replace(cold_env, doppler_nodes=81)
        fine = doppler_average_rho12(broad_system, finer, rabi)
        assert abs(coarse - fine) < 1e-8 * abs(fine)

    def test_node_convergence_room_temperature(self, broad_system):
        """A 290 K vapor needs the trapezoid rule; doubling its nodes changes little."""
        system = replace(broad_system, gamma3=TWO_PI * 5e6, gamma4=TWO_PI * 5e6)
        rabi = TWO_PI * 1e6
        env = Environment(
            temperature=290.0, doppler_nodes=4001, doppler_method="trapezoid"
        )
        coarse = doppler_average_rho12(system, env, rabi)
        fine = doppler_average_rho12(system, replace(env, doppler_nodes=8001), rabi)
        assert abs(coarse - fine) < 1e-8 * abs(fine)

    def test_trapezoid_agrees(self, broad_system, cold_env):
        """The trapezoid fallback agrees with Gauss-Hermite."""
        rabi = TWO_PI * 1e6
        reference = doppler_average_rho12(broad_system, cold_env, rabi)
        env = replace(cold_env, doppler_method="trapezoid", doppler_nodes=201)
        averaged = doppler_average_rho12(broad_system, env, rabi)
        assert abs(averaged - reference) < 1e-6 * abs(reference)

    def test_environment_validation(self):
        """Even node counts and unknown methods are rejected."""
        with pytest.raises(ValueError):
            Environment(doppler_nodes=40)
        with pytest.raises(ValueError):
            Environment(doppler_method="simpson")


class TestSusceptibility:
    """Test the susceptibility and its slope."""

    def test_absorbing_on_resonance(self, broad_system, cold_env):
        """chi stays non-negative across the RF Rabi range."""
        for rabi in np.linspace(0.0, 10.0 * broad_system.probe_rabi, 11):
            assert susceptibility(broad_system, cold_env, rabi) >= 0.0

    def test_linear_in_density(self, broad_system, cold_env):
        """Doubling the atomic density doubles chi."""
        rabi = TWO_PI * 1e6
        single = susceptibility(broad_system, cold_env, rabi)
        denser = replace(broad_system, atomic_density=2 * broad_system.atomic_density)
        double = susceptibility(denser, cold_env, rabi)
        assert double == pytest.approx(2.0 * single, rel=1e-12)

    def test_requires_probe(self, broad_system, cold_env):
        """A dark probe has no susceptibility."""
        with pytest.raises(ValueError):
            susceptibility(replace(broad_system, probe_rabi=0.0), cold_env, 1.0)

    def test_slope_positive_on_rising_side(self, broad_system, cold_env):
        """RF dressing destroys transparency, so chi rises with the RF amplitude."""
        assert susceptibility_slope(broad_system, cold_env, TWO_PI * 1e6) > 0

    def test_slope_vanishes_at_even_point(self, broad_system, cold_env):
        """chi is even in the RF amplitude, so the slope vanishes near zero."""
        near_zero = susceptibility_slope(broad_system, cold_env, TWO_PI * 100.0)
        rising = susceptibility_slope(broad_system, cold_env, TWO_PI * 1e6)
        assert abs(near_zero) < 1e-2 * abs(rising)

    def test_slope_step_disagreement(self, broad_system, cold_env, monkeypatch):
        """Step sizes disagreeing by 5e-4 relative fail, even on a large chi."""
        wavenumber = 6.32e-4
        monkeypatch.setattr(
            "atomic_beamformer.core.atom.susceptibility",
            lambda system, env, rabi: 1e7 + math.sin(wavenumber * (rabi - 1e6)),
        )
        with pytest.raises(NonConverged):
            susceptibility_slope(broad_system, cold_env, 1e6)

    def test_slope_step_agreement(self, broad_system, cold_env, monkeypatch):
        """Step sizes agreeing to 1e-5 relative pass and give the derivative."""
        wavenumber = 8.94e-5
        monkeypatch.setattr(
            "atomic_beamformer.core.atom.susceptibility",
            lambda system, env, rabi: math.sin(wavenumber * (rabi - 1e6)),
        )
        assert susceptibility_slope(broad_system, cold_env, 1e6) == pytest.approx(
            wavenumber, rel=1e-4
        )

    def test_slope_requires_positive_rabi(self, broad_system, cold_env):
        """The slope is only defined at a positive operating point."""
        with pytest.raises(ValueError):
            susceptibility_slope(broad_system, cold_env, 0.0)

    def test_operating_point(self, broad_system, cold_env):
        """The LO field sets the operating Rabi frequency through mu34."""
        point = operating_point(broad_system, cold_env, 0.0346)
        rabi = broad_system.mu34 * 0.0346 / 1.054571817e-34
        assert point.operating_rabi == pytest.approx(rabi)
        assert point.dipole_moment == broad_system.mu34
        chi = susceptibility(broad_system, cold_env, point.operating_rabi)
        assert point.chi == pytest.approx(chi)


class TestSusceptibilityModels:
    """Test the linear and tabulated susceptibility models."""

    def test_linear_model(self):
        """The linear model passes through the operating point with the given slope."""
        point = SusceptibilityPoint(
            chi=42.4, chi_slope=3.3e-6, operating_rabi=4.4e7, dipole_moment=1.3e-25
        )
        model = LinearSusceptibility(point)
        assert model(4.4e7) == pytest.approx(42.4)
        assert model(4.4e7 + 1e5) == pytest.approx(42.4 + 0.33)

    def test_point_validation(self):
        """Non-finite entries are rejected."""
        with pytest.raises(ValueError):
            SusceptibilityPoint(
                chi=math.nan, chi_slope=1.0, operating_rabi=1.0, dipole_moment=1.0
            )

    def test_curve_accuracy(self, broad_system):
        """The tabulated curve matches direct solves between its nodes."""
        env = Environment(temperature=1e-3, doppler_nodes=11)
        center = TWO_PI * 1e6
        curve = SusceptibilityCurve.build(broad_system, env, center)
        for rabi in (0.37 * center, 1.13 * center, 4.9 * center):
            exact = susceptibility(broad_system, env, rabi)
            assert float(curve(rabi)) == pytest.approx(exact, rel=1e-5)

    def test_curve_range(self, broad_system):
        """Evaluating outside the tabulated range is an error."""
        env = Environment(temperature=1e-3, doppler_nodes=11)
        curve = SusceptibilityCurve.build(broad_system, env, TWO_PI * 1e6)
        with pytest.raises(ValueError):
            curve(TWO_PI * 1e6 * 20)
