"""
Tests for Full Model Dynamics
"""

import numpy as np
import pytest

from dynamics_full import (
    FullState,
    ModelParams,
    dissipation_check,
    double_well,
    double_well_prime,
    energy,
    masses,
    potentials,
    reference_rk4,
    step_imex,
)
from exchange import ExchangeLaw
from spectral_core import BulkField, SlabGeometry, SurfaceField, TorusGeometry, surface_l2_norm
from utils.exceptions import ConfigurationException, NumericalFailureException, StepSizeException


def constant_state(slab, phi, v, u=0.0) -> FullState:
    return FullState(t=0.0, u=BulkField.constant(slab, u),
                     phi=SurfaceField.constant(slab.base, phi),
                     v=SurfaceField.constant(slab.base, v))


def small_oracle_state(smooth_field):
    """N = 8, Mz = 4 smooth state for RK4 comparisons."""
    slab = SlabGeometry(base=TorusGeometry(L=1.0, N=8), H=1.0, Mz=4)
    phi_G = smooth_field(slab.base, 0.05, seed=11)
    return FullState(t=0.0, u=BulkField.constant(slab, 0.5), phi=phi_G - 0.4, v=0.5 * phi_G + 0.5)


class TestModelParams:
    """Test parameter validation."""

    def test_default_stabilization(self):
        p = ModelParams(eps=0.04, delta=0.1, dt=1e-4)
        assert p.s_stab == pytest.approx(100.0)

    def test_small_parameter_floor(self):
        with pytest.raises(ConfigurationException):
            ModelParams(eps=1e-9, delta=0.1, dt=1e-4)

    def test_nonpositive_dt(self):
        with pytest.raises(ConfigurationException):
            ModelParams(eps=0.1, delta=0.1, dt=0.0)

    def test_steps(self):
        assert ModelParams(eps=0.1, delta=0.1, dt=1e-4, t_end=0.25).steps == 2500


class TestDoubleWell:
    """Test the double-well potential."""

    def test_wells_and_barrier(self):
        assert double_well(1.0) == 0.0
        assert double_well(-1.0) == 0.0
        assert double_well(0.0) == 1.0
        assert double_well_prime(0.5) == pytest.approx(-1.5)


class TestPotentialsAndEnergy:
    """Test chemical potentials, energies and masses on constant states."""

    def test_potentials_vanish_in_minus_phase(self, slab, params):
        mu, theta = potentials(constant_state(slab, -1.0, 0.0), params)
        assert mu.max_abs() < 1e-14
        assert theta.max_abs() < 1e-14

    def test_potentials_vanish_at_half_filling(self, slab, params):
        mu, theta = potentials(constant_state(slab, 0.0, 0.5), params)
        assert mu.max_abs() < 1e-14
        assert theta.max_abs() < 1e-14

    def test_potentials_scalar_oracle(self, slab):
        p = ModelParams(eps=1.0, delta=1.0, dt=1e-4)
        mu, theta = potentials(constant_state(slab, 0.5, 0.0), p)
        np.testing.assert_allclose(mu.values, 0.0, atol=1e-14)
        np.testing.assert_allclose(theta.values, -3.0, atol=1e-14)

    def test_energy_zero_in_plus_phase(self, slab, params):
        assert energy(constant_state(slab, 1.0, 1.0), params).F == pytest.approx(0.0, abs=1e-14)

    def test_energy_barrier(self, slab):
        p = ModelParams(eps=1.0, delta=0.1, dt=1e-4)
        assert energy(constant_state(slab, 0.0, 0.5), p).F == pytest.approx(1.0, abs=1e-14)

    def test_energy_with_affinity(self, slab):
        p = ModelParams(eps=1.0, delta=1.0, dt=1e-4)
        assert energy(constant_state(slab, 0.0, 0.0), p).F == pytest.approx(1.5, abs=1e-14)

    def test_energy_exch_needs_law(self, slab, params, noneq_law):
        state = constant_state(slab, 0.0, 0.2, u=0.3)
        assert np.isnan(energy(state, params).exch)
        assert np.isfinite(energy(state, params, noneq_law).exch)

    def test_masses(self, slab):
        assert masses(constant_state(slab, -1.0, 0.0)).m == pytest.approx(-1.0)
        assert masses(constant_state(slab, 0.0, 0.2, u=0.3)).M_total == pytest.approx(0.5)


class TestStepIMEX:
    """Test the IMEX step of the full model."""

    def test_homogeneous_state_is_stationary(self, homogeneous_full_state, params, noneq_law):
        new = step_imex(homogeneous_full_state, params, noneq_law)
        assert np.max(np.abs(new.phi.values + 1.0)) < 1e-13
        assert new.v.max_abs() < 1e-13
        assert np.max(np.abs(new.u.values)) < 1e-13
        assert new.t == pytest.approx(params.dt)

    def test_no_exchange_keeps_constant_bulk(self, full_state, params):
        new = step_imex(full_state, params, ExchangeLaw.equilibrium(0.0))
        np.testing.assert_allclose(new.u.values, full_state.u.values, atol=1e-15)

    def test_masses_conserved(self, full_state, params, noneq_law):
        """Test lipid and cholesterol masses over many steps."""
        m0 = masses(full_state)
        state = full_state
        for _ in range(200):
            state = step_imex(state, params, noneq_law)
            m = masses(state)
            assert abs(m.m - m0.m) <= 1e-12
            assert abs(m.M_total - m0.M_total) <= 1e-10 * (1.0 + abs(m0.M_total))

    def test_non_finite_state_raises(self, slab, params, noneq_law):
        bad = constant_state(slab, np.inf, 0.0)
        with pytest.raises(NumericalFailureException) as info:
            step_imex(bad, params, noneq_law)
        assert info.value.last_state is bad


class TestReferenceRK4:
    """Test the RK4 oracle of the Galerkin system."""

    def test_homogeneous_state_unchanged(self, homogeneous_full_state, noneq_law):
        p = ModelParams(eps=0.1, delta=0.1, dt=1e-4)
        out = reference_rk4(homogeneous_full_state, p, noneq_law, dt_ref=1e-7, steps=10)
        assert np.max(np.abs(out.phi.values + 1.0)) < 1e-12
        assert out.v.max_abs() < 1e-12

    def test_step_size_guard(self, full_state, params, noneq_law):
        with pytest.raises(StepSizeException):
            reference_rk4(full_state, params, noneq_law, dt_ref=1e-2, steps=1)

    def test_masses_conserved(self, noneq_law, smooth_field):
        state = small_oracle_state(smooth_field)
        p = ModelParams(eps=0.04, delta=0.1, dt=1e-4)
        out = reference_rk4(state, p, noneq_law, dt_ref=2e-7, steps=200)
        assert masses(out).m == pytest.approx(masses(state).m, abs=1e-11)
        assert masses(out).M_total == pytest.approx(masses(state).M_total, abs=1e-11)

    @pytest.mark.slow
    def test_imex_converges_to_oracle(self, noneq_law, smooth_field):
        """Test step_imex approaches the RK4 trajectory at first order in dt."""
        state = small_oracle_state(smooth_field)
        T = 0.01
        p = ModelParams(eps=0.04, delta=0.1, dt=2.5e-6)
        exact = reference_rk4(state, p, noneq_law, dt_ref=1e-7, steps=int(round(T / 1e-7)))

        errors = []
        for dt in (1e-5, 5e-6, 2.5e-6):
            p_dt = ModelParams(eps=0.04, delta=0.1, dt=dt)
            s = state
            for _ in range(int(round(T / dt))):
                s = step_imex(s, p_dt, noneq_law)
            errors.append(surface_l2_norm(s.phi - exact.phi))

        assert errors[0] > errors[1] > errors[2]
        orders = [np.log2(errors[i] / errors[i + 1]) for i in range(2)]
        for order in orders:
            assert 0.9 <= order <= 1.2


class TestDissipation:
    """Test the discrete energy balance."""

    def test_stationary_state_residual(self, homogeneous_full_state, params, noneq_law):
        new = step_imex(homogeneous_full_state, params, noneq_law)
        report = dissipation_check(homogeneous_full_state, new, params, noneq_law)
        assert abs(report.residual) < 1e-12

    def test_equilibrium_exchange_nonpositive(self, full_state, params, equilibrium_law):
        new = step_imex(full_state, params, equilibrium_law)
        report = dissipation_check(full_state, new, params, equilibrium_law)
        assert report.exch_nonpositive is True
        assert report.exch <= 1e-12

    def test_residual_first_order(self, full_state, noneq_law):
        """Test the balance residual shrinks with dt."""
        residuals = []
        for dt in (4e-6, 1e-6):
            p = ModelParams(eps=0.1, delta=0.1, dt=dt)
            new = step_imex(full_state, p, noneq_law)
            residuals.append(abs(dissipation_check(full_state, new, p, noneq_law).residual))
        assert residuals[1] < 0.5 * residuals[0]

    @pytest.mark.slow
    def test_equilibrium_energy_monotone(self, equilibrium_law):
        """Test E_total never increases under the equilibrium law at the reference grid and step."""
        slab = SlabGeometry(base=TorusGeometry(L=1.0, N=64), H=1.0, Mz=16)
        rng = np.random.Generator(np.random.PCG64(42))
        noise = SurfaceField.from_values(slab.base, rng.uniform(-0.05, 0.05, size=(64, 64)))
        phi_G = noise - noise.mean()
        state = FullState(t=0.0, u=BulkField.constant(slab, 0.5), phi=phi_G - 0.4,
                          v=0.5 * phi_G + 0.5)
        p = ModelParams(eps=0.04, delta=0.1, dt=1e-4)
        E_prev = energy(state, p, equilibrium_law).E_total
        for _ in range(300):
            state = step_imex(state, p, equilibrium_law)
            report = energy(state, p, equilibrium_law)
            assert report.E_total <= E_prev + 1e-9 * (1.0 + abs(E_prev))
            assert report.exch <= 1e-12
            E_prev = report.E_total


@pytest.mark.slow
class TestConservationAcceptance:
    """Test conservation at the reference configuration."""

    def test_reference_configuration(self, noneq_law):
        slab = SlabGeometry(base=TorusGeometry(L=1.0, N=64), H=1.0, Mz=16)
        rng = np.random.Generator(np.random.PCG64(42))
        noise = SurfaceField.from_values(slab.base, rng.uniform(-0.05, 0.05, size=(64, 64)))
        phi_G = noise - noise.mean()
        state = FullState(t=0.0, u=BulkField.constant(slab, 0.5), phi=phi_G - 0.4,
                          v=0.5 * phi_G + 0.5)
        p = ModelParams(eps=0.04, delta=0.1, dt=1e-4)
        m0 = masses(state)
        for _ in range(2000):
            state = step_imex(state, p, noneq_law)
            m = masses(state)
            assert abs(m.m - m0.m) <= 1e-12 * slab.base.area
            assert abs(m.M_total - m0.M_total) <= 1e-10 * (1.0 + abs(m0.M_total))


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
