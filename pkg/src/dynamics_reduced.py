"""
Reduced Dynamics
Large-diffusion limit: surface Cahn-Hilliard system coupled to a spatially constant
cytosolic concentration u(t), plus the mean-free reformulation for the
non-equilibrium exchange law.
"""

import math
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from dynamics_full import (
    ModelParams,
    double_well_prime,
    nonlinear_term,
    surface_imex_solve,
    surface_potentials,
)
from exchange import NONEQ, ExchangeLaw, eval_q
from spectral_core import (
    SlabGeometry,
    SurfaceField,
    mean_free_project,
    surface_gradient_norm_sq,
    surface_inner,
    surface_integral,
)
from utils.exceptions import NumericalFailureException, UnsupportedLawException
from utils.logger import setup_logger

logger = setup_logger(__name__)


@dataclass(frozen=True)
class ReducedState:
    t: float
    u: float
    phi: SurfaceField
    v: SurfaceField
    slab: SlabGeometry

    def is_finite(self) -> bool:
        return bool(math.isfinite(self.u)
                    and np.all(np.isfinite(self.phi.values))
                    and np.all(np.isfinite(self.v.values)))

    @property
    def mass_total(self) -> float:
        return self.slab.volume * self.u + surface_integral(self.v)


@dataclass(frozen=True)
class MeanFreeView:
    """Mean-free parts and mean values of a reduced state."""
    phi: SurfaceField
    v: SurfaceField
    theta: SurfaceField
    mu: SurfaceField
    phi_mean: float
    v_mean: float
    theta_mean: float
    mu_mean: float
    t: float
    slab: SlabGeometry

    def reconstruct(self, u: float) -> ReducedState:
        return ReducedState(t=self.t, u=u, phi=self.phi + self.phi_mean,
                            v=self.v + self.v_mean, slab=self.slab)


@dataclass
class EnergySplit:
    """Surface energy with the affinity written through theta, and its reaction terms."""
    F_split: float
    react_theta: float
    react_cross: float


def _check_finite(new_state: ReducedState, old_state, label: str) -> ReducedState:
    if not new_state.is_finite():
        raise NumericalFailureException(
            f"{label}: non-finite values at t={new_state.t:.6g}", last_state=old_state
        )
    return new_state


def reduced_potentials(state: ReducedState, p: ModelParams):
    return surface_potentials(state.phi, state.v, p)


def step_reduced(state: ReducedState, p: ModelParams, law: ExchangeLaw) -> ReducedState:
    """Surface IMEX step with the scalar u advanced by the same explicit flux."""
    _, theta = reduced_potentials(state, p)
    q = eval_q(law, state.u, state.v, theta)
    phi_new, v_new = surface_imex_solve(state.phi, state.v, q, p)
    u_new = state.u - p.dt * surface_integral(q) / state.slab.volume
    new_state = ReducedState(t=state.t + p.dt, u=u_new, phi=phi_new, v=v_new, slab=state.slab)
    return _check_finite(new_state, state, "step_reduced")


def u_rhs_closed_form(U: float, slab: SlabGeometry, c1: float, c2: float, M: float) -> float:
    """
    dU/dt for U = |B| u under the non-equilibrium law, with the surface mass of v
    eliminated through M = U + integral of v.
    """
    B, G = slab.volume, slab.base.area
    return -(c1 / B) * U * U + (c1 * (M - G) / B - c2) * U + c2 * M


def u_fixed_point(c1: float, c2: float, M: float, volume: float, area: float) -> float:
    """Nonnegative zero of the u-equation, returned as a concentration u = U/|B|."""
    A = c1 * volume
    b = c2 * volume + c1 * area - M * c1
    C = M * c2
    disc = b * b + 4.0 * A * C
    assert disc >= 0.0, "negative discriminant for admissible exchange constants"
    if C == 0.0:
        return max(0.0, -b / A)
    root = math.sqrt(disc)
    if b >= 0.0:
        return 2.0 * C / (b + root)
    return (-b + root) / (2.0 * A)


def u_exact(t: float, u0: float, c1: float, c2: float, M: float,
            volume: float, area: float) -> float:
    """Closed-form solution of the Riccati equation for u(t)."""
    u_plus = u_fixed_point(c1, c2, M, volume, area)
    # the other root of c1 u^2 + b u / B - M c2 / B = 0
    A = c1 * volume
    b = c2 * volume + c1 * area - M * c1
    u_minus = -b / A - u_plus
    if u0 == u_minus:
        return u_minus
    rate = c1 * (u_plus - u_minus)
    if rate == 0.0:
        return u_plus + (u0 - u_plus) / (1.0 + c1 * (u0 - u_plus) * t)
    r = (u0 - u_plus) / (u0 - u_minus)
    decay = r * math.exp(-rate * t)
    return (u_plus - u_minus * decay) / (1.0 - decay)


def decompose_mean_free(state: ReducedState, p: ModelParams) -> MeanFreeView:
    """Split a reduced state into mean-free parts and mean values."""
    mu, theta = reduced_potentials(state, p)
    G = state.slab.base.area
    phi_mean = state.phi.mean()
    # integral of v follows from combined mass conservation
    v_mean = (state.mass_total - state.slab.volume * state.u) / G
    theta_mean = (2.0 / p.delta) * (2.0 * v_mean - 1.0 - phi_mean)
    w_prime = SurfaceField.from_values(state.phi.geometry, double_well_prime(state.phi.values))
    mu_mean = w_prime.mean() / p.eps - 0.5 * theta_mean
    return MeanFreeView(
        phi=mean_free_project(state.phi),
        v=mean_free_project(state.v),
        theta=mean_free_project(theta),
        mu=mean_free_project(mu),
        phi_mean=phi_mean,
        v_mean=v_mean,
        theta_mean=theta_mean,
        mu_mean=mu_mean,
        t=state.t,
        slab=state.slab,
    )


def step_reduced_meanfree(view: MeanFreeView, u: float, p: ModelParams,
                          c1: float, c2: float,
                          law: Optional[ExchangeLaw] = None) -> Tuple[MeanFreeView, float]:
    """
    One IMEX step of the mean-free (phi, theta) system for the non-equilibrium law.

    The reaction P q = -(delta (c1 u + c2) / 4) theta - ((c1 u + c2) / 2) phi is
    explicit and dealiased like q in the primitive step; u follows the closed-form ODE.
    """
    if law is not None and law.kind != NONEQ:
        raise UnsupportedLawException("step_reduced_meanfree", law.kind)

    slab = view.slab
    g = slab.base
    lam = g.k_squared
    dt, eps, delta, S = p.dt, p.eps, p.delta, p.s_stab
    kappa = c1 * u + c2

    phi_full = view.phi + view.phi_mean
    N_hat = nonlinear_term(phi_full).coefficients
    phi_hat = view.phi.coefficients
    theta_hat = view.theta.coefficients
    reaction = -kappa * (0.25 * delta * theta_hat + 0.5 * phi_hat) * g.dealias_mask

    a11 = 1.0 + dt * lam * (eps * lam + S)
    a12 = -0.5 * dt * lam
    a21 = 0.5
    a22 = 0.25 * delta + dt * lam
    b1 = phi_hat * (1.0 + dt * lam * S) - dt * lam * N_hat / eps
    b2 = 0.25 * delta * theta_hat + 0.5 * phi_hat + dt * reaction
    det = a11 * a22 - a12 * a21
    phi_new = (b1 * a22 - a12 * b2) / det
    theta_new = (a11 * b2 - a21 * b1) / det
    phi_new[0, 0] = 0.0
    theta_new[0, 0] = 0.0

    M = slab.volume * u + g.area * view.v_mean
    U_new = slab.volume * u + dt * u_rhs_closed_form(slab.volume * u, slab, c1, c2, M)
    u_new = U_new / slab.volume

    phi_G = SurfaceField.from_coefficients(g, phi_new)
    theta_G = SurfaceField.from_coefficients(g, theta_new)
    v_G = 0.25 * delta * theta_G + 0.5 * phi_G
    v_mean = (M - U_new) / g.area
    state = ReducedState(t=view.t + dt, u=u_new, phi=phi_G + view.phi_mean,
                         v=v_G + v_mean, slab=slab)
    state = _check_finite(state, view, "step_reduced_meanfree")
    return decompose_mean_free(state, p), u_new


def reduced_energy_split(state: ReducedState, p: ModelParams, c1: float, c2: float) -> EnergySplit:
    """
    Energy with the affinity term written as (delta/8) theta_G^2 and the reaction
    terms driving it under the non-equilibrium law.
    """
    view = decompose_mean_free(state, p)
    g = state.phi.geometry
    kappa = c1 * state.u + c2
    theta_sq = surface_inner(view.theta, view.theta)
    gradient = 0.5 * p.eps * surface_gradient_norm_sq(state.phi)
    well = g.area * float(np.mean((1.0 - state.phi.values ** 2) ** 2)) / p.eps
    return EnergySplit(
        F_split=gradient + well + p.delta / 8.0 * theta_sq,
        react_theta=-0.25 * p.delta * kappa * theta_sq,
        react_cross=-0.5 * kappa * surface_inner(view.phi, view.theta),
    )
