"""
Tests for the Stationary Solver
"""

import math

import numpy as np
import pytest

from dynamics_full import ModelParams
from dynamics_reduced import step_reduced
from exchange import ExchangeLaw
from spectral_core import (
    SlabGeometry,
    SurfaceField,
    TorusGeometry,
    solve_surface_helmholtz,
)
from stationary import (
    StationaryConfig,
    convex_operator,
    fixed_point_iterate,
    mean_value_solve,
    coupled_residual,
    newton_polish,
    newton_semilinear,
    residuals_of_state,
)
from utils.exceptions import ConfigurationException, SingularSystemException

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def make_config(slab, eps=0.1, **kwargs) -> StationaryConfig:
    return StationaryConfig(phi_mean=-0.4, mass_total=1.0, law=ExchangeLaw.noneq(1.0, 1.0),
                            params=ModelParams(eps=eps, delta=0.1, dt=1e-4), slab=slab, **kwargs)


class TestStationaryConfig:
    """Test solver option validation."""

    def test_nonpositive_tol(self, slab):
        with pytest.raises(ConfigurationException):
            make_config(slab, tol=0.0)

    def test_damping_range(self, slab):
        with pytest.raises(ConfigurationException):
            make_config(slab, damping=1.5)

    def test_negative_polish_cadence(self, slab):
        with pytest.raises(ConfigurationException):
            make_config(slab, polish_every=-1)


class TestMeanValueSolve:
    """Test the scalar mean-value problem."""

    def test_noneq_unit_configuration(self, torus, noneq_law):
        u, v_bar = mean_value_solve(noneq_law, SurfaceField.zeros(torus), 1.0, 1.0, 1.0)
        assert u == pytest.approx(GOLDEN, abs=1e-12)
        assert v_bar == pytest.approx(0.381966, abs=1e-6)
        assert u + v_bar == pytest.approx(1.0, abs=1e-12)

    def test_empty_system(self, torus, noneq_law):
        assert mean_value_solve(noneq_law, SurfaceField.zeros(torus), 0.0, 1.0, 1.0) == (0.0, 0.0)

    def test_independent_of_v_shape(self, torus, noneq_law, smooth_field):
        flat = mean_value_solve(noneq_law, SurfaceField.zeros(torus), 1.0, 1.0, 1.0)
        bumpy = mean_value_solve(noneq_law, smooth_field(torus, 0.2, seed=4), 1.0, 1.0, 1.0)
        assert bumpy == pytest.approx(flat, abs=1e-14)

    def test_rejects_non_mean_free_shape(self, torus, noneq_law):
        with pytest.raises(SingularSystemException):
            mean_value_solve(noneq_law, SurfaceField.constant(torus, 1.0), 1.0, 1.0, 1.0)

    def test_equilibrium_root(self, torus):
        """Test u = theta with theta = (2 / delta)(2 (1 - u) - 1) at phi = 0."""
        law = ExchangeLaw.equilibrium(1.0)
        u, v_bar = mean_value_solve(law, SurfaceField.zeros(torus), 1.0, 1.0, 1.0,
                                    phi=SurfaceField.zeros(torus), delta=0.1)
        assert u == pytest.approx(20.0 / 41.0, abs=1e-10)
        assert u + v_bar == pytest.approx(1.0, abs=1e-12)

    def test_equilibrium_needs_phase(self, torus):
        with pytest.raises(ConfigurationException):
            mean_value_solve(ExchangeLaw.equilibrium(1.0), SurfaceField.zeros(torus), 1.0, 1.0, 1.0)


class TestNewtonSemilinear:
    """Test the monotone semilinear solve."""

    def test_zero_rhs(self, torus):
        assert newton_semilinear(SurfaceField.zeros(torus), 0.1).max_abs() == 0.0

    def test_small_rhs_is_nearly_linear(self, torus, smooth_field):
        f = smooth_field(torus, 1e-4, seed=2)
        phi = newton_semilinear(f, 0.1)
        linear = solve_surface_helmholtz(0.0, 0.1, f)
        assert np.max(np.abs(phi.values - linear.values)) <= 1e-10

    def test_residual_within_tolerance(self, torus, smooth_field):
        f = smooth_field(torus, 0.1, seed=6)
        tol = 1e-10
        phi = newton_semilinear(f, 0.1, tol=tol, phi_mean=-0.4)
        assert (convex_operator(phi, 0.1, -0.4) - f).max_abs() <= 1e3 * tol
        assert abs(phi.mean()) < 1e-14

    def test_rejects_non_mean_free_rhs(self, torus):
        with pytest.raises(SingularSystemException):
            newton_semilinear(SurfaceField.constant(torus, 1.0), 0.1)

    def test_independent_of_initial_guess(self, torus, smooth_field):
        """Test two different starts reach the same solution of the monotone problem."""
        f = smooth_field(torus, 0.1, seed=6)
        tol = 1e-9
        a = newton_semilinear(f, 0.1, tol=tol, phi_mean=-0.4)
        b = newton_semilinear(f, 0.1, tol=tol, phi_mean=-0.4,
                              initial=smooth_field(torus, 0.2, seed=3))
        assert (a - b).max_abs() <= 10 * tol


class TestCoupledSystem:
    """Test the coupled residual and its Newton-Krylov solve."""

    def test_homogeneous_residual_vanishes(self, slab):
        mu, theta_eq = coupled_residual(make_config(slab), SurfaceField.zeros(slab.base),
                                        SurfaceField.zeros(slab.base))
        assert mu.max_abs() <= 1e-12
        assert theta_eq.max_abs() <= 1e-12

    def test_residuals_are_mean_free(self, slab, smooth_field):
        cfg = make_config(slab)
        phi, v = smooth_field(slab.base, 0.1, seed=1), smooth_field(slab.base, 0.05, seed=2)
        mu, theta_eq = coupled_residual(cfg, phi, v)
        assert mu.max_abs() > 1e-3
        assert abs(mu.mean()) < 1e-12
        assert abs(theta_eq.mean()) < 1e-12

    def test_polish_from_perturbed_state(self, slab, smooth_field):
        """Test eps = 1, where the only nearby stationary state is homogeneous."""
        cfg = make_config(slab, eps=1.0)
        phi = smooth_field(slab.base, 0.01, seed=8)
        sol = newton_polish(cfg, 2.0 * phi, phi)
        assert max(sol.residuals.values()) < cfg.tol
        assert sol.phi.max_abs() <= 1e-8
        assert sol.u_mean == pytest.approx(GOLDEN, abs=1e-12)


class TestFixedPointIterate:
    """Test the damped stationary iteration."""

    def test_homogeneous_branch(self, slab):
        """Test a zero initial guess lands on the homogeneous stationary state at once."""
        sol = fixed_point_iterate(make_config(slab), SurfaceField.zeros(slab.base))
        assert sol.iterations == 1
        assert sol.phi.max_abs() == 0.0
        assert sol.u_mean == pytest.approx(GOLDEN, abs=1e-12)
        assert max(sol.residuals.values()) <= 1e-12

    def test_converges_in_stable_regime(self, slab, smooth_field, noneq_law):
        """Test eps = 1, where the homogeneous state is linearly stable."""
        cfg = make_config(slab, eps=1.0)
        sol = fixed_point_iterate(cfg, smooth_field(slab.base, 0.01, seed=8))
        assert max(sol.residuals.values()) < 1e-8
        assert len(sol.history) == sol.iterations

        state = sol.to_reduced_state(slab)
        p = ModelParams(eps=1.0, delta=0.1, dt=1e-4)
        marched = state
        for _ in range(100):
            marched = step_reduced(marched, p, noneq_law)
        assert np.max(np.abs(marched.phi.values - state.phi.values)) <= 1e-6
        assert np.max(np.abs(marched.v.values - state.v.values)) <= 1e-6
        assert abs(marched.u - state.u) <= 1e-6

    def test_residuals_of_generic_state(self, reduced_state, slab):
        assert max(residuals_of_state(reduced_state, make_config(slab)).values()) > 1e-3

    @pytest.mark.slow
    def test_patterned_state_at_small_eps(self, smooth_field, noneq_law):
        """Test a nontrivial stationary state at eps = 0.04, m = -0.4 is found and is a steady state."""
        slab = SlabGeometry(base=TorusGeometry(L=1.0, N=32), H=1.0, Mz=8)
        cfg = make_config(slab, eps=0.04, tol=5e-9)
        sol = fixed_point_iterate(cfg, smooth_field(slab.base, 0.3, seed=42))
        assert max(sol.residuals.values()) < 1e-8
        assert sol.phi.max_abs() > 0.5

        state = sol.to_reduced_state(slab)
        marched = state
        for _ in range(100):
            marched = step_reduced(marched, cfg.params, noneq_law)
        assert np.max(np.abs(marched.phi.values - state.phi.values)) <= 1e-6


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
