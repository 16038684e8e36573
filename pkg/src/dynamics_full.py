"""
Full Bulk-Surface Dynamics
Galerkin time stepping of the coupled bulk diffusion / surface Cahn-Hilliard system
together with its mass and energy diagnostics.
"""

from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from constants import MIN_SMALL_PARAMETER, RK4_STABILITY_LIMIT
from exchange import EQUILIBRIUM, ExchangeLaw, eval_q
from spectral_core import (
    BulkField,
    SurfaceField,
    bulk_gradient_norm_sq,
    bulk_integral,
    bulk_l2_norm_sq,
    bulk_trace,
    dealias_cubic,
    surface_gradient_norm_sq,
    surface_integral,
)
from utils.exceptions import (
    ConfigurationException,
    NumericalFailureException,
    StepSizeException,
)
from utils.logger import setup_logger

logger = setup_logger(__name__)


def double_well(s):
    return (1.0 - s * s) ** 2


def double_well_prime(s):
    return 4.0 * s ** 3 - 4.0 * s


@dataclass(frozen=True)
class ModelParams:
    """Physical and numerical parameters shared by all models."""
    eps: float
    delta: float
    dt: float
    D: float = 1.0
    s_stab: Optional[float] = None
    t_end: float = 1.0

    def __post_init__(self):
        if self.eps < MIN_SMALL_PARAMETER or self.delta < MIN_SMALL_PARAMETER:
            raise ConfigurationException(
                f"eps and delta must be >= {MIN_SMALL_PARAMETER} (eps={self.eps}, delta={self.delta})"
            )
        if self.dt <= 0 or self.D <= 0:
            raise ConfigurationException(f"dt and D must be positive (dt={self.dt}, D={self.D})")
        if self.s_stab is None:
            object.__setattr__(self, "s_stab", 4.0 / self.eps)
        elif self.s_stab < 0:
            raise ConfigurationException(f"Stabilization must be >= 0, got {self.s_stab}")

    @property
    def steps(self) -> int:
        return int(round(self.t_end / self.dt))


@dataclass(frozen=True)
class FullState:
    t: float
    u: BulkField
    phi: SurfaceField
    v: SurfaceField

    @property
    def slab(self):
        return self.u.geometry

    def is_finite(self) -> bool:
        return bool(np.all(np.isfinite(self.u.coefficients))
                    and np.all(np.isfinite(self.phi.values))
                    and np.all(np.isfinite(self.v.values)))


@dataclass
class EnergyReport:
    F: float
    E_bulk: float
    E_total: float
    gnorm_mu: float
    gnorm_theta: float
    gnorm_u: float
    exch: float


@dataclass
class MassReport:
    m: float
    M_total: float


@dataclass
class DissipationReport:
    """Discrete residual of dE/dt + dissipation - exchange work."""
    residual: float
    dE_dt: float
    dissipation: float
    exch: float
    exch_nonpositive: Optional[bool] = None
    details: dict = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Surface pieces shared with the reduced model
# ---------------------------------------------------------------------------

def affinity(phi: SurfaceField, v: SurfaceField) -> SurfaceField:
    """2v - 1 - phi."""
    return 2.0 * v - phi - 1.0


def nonlinear_term(phi: SurfaceField) -> SurfaceField:
    """Dealiased W'(phi)."""
    return dealias_cubic(SurfaceField.from_values(phi.geometry, double_well_prime(phi.values)))


def surface_potentials(phi: SurfaceField, v: SurfaceField,
                       p: ModelParams) -> Tuple[SurfaceField, SurfaceField]:
    g = phi.geometry
    w = affinity(phi, v)
    N_hat = nonlinear_term(phi).coefficients
    mu_hat = p.eps * g.k_squared * phi.coefficients + N_hat / p.eps - w.coefficients / p.delta
    mu = SurfaceField.from_coefficients(g, mu_hat)
    theta = (2.0 / p.delta) * w
    return mu, theta


def surface_free_energy(phi: SurfaceField, v: SurfaceField, p: ModelParams) -> float:
    g = phi.geometry
    w = affinity(phi, v).values
    gradient = 0.5 * p.eps * surface_gradient_norm_sq(phi)
    well = g.area * float(np.mean(double_well(phi.values))) / p.eps
    aff = g.area * float(np.mean(w * w)) / (2.0 * p.delta)
    return gradient + well + aff


def surface_imex_solve(phi: SurfaceField, v: SurfaceField, q: SurfaceField,
                       p: ModelParams) -> Tuple[SurfaceField, SurfaceField]:
    """
    One stabilized linearly implicit step of the surface system, solved per mode.

    Unknowns are phi and w = 2v - 1 - phi at the new level; W'(phi) and q enter
    explicitly. The zero mode reduces to phi <- phi, v <- v + dt q.
    """
    g = phi.geometry
    lam = g.k_squared
    dt, eps, delta, S = p.dt, p.eps, p.delta, p.s_stab
    one_hat = np.zeros_like(lam)
    one_hat[0, 0] = 1.0

    N_hat = nonlinear_term(phi).coefficients
    a11 = 1.0 + dt * lam * (eps * lam + S)
    a12 = -dt * lam / delta
    a21 = 0.5
    a22 = 0.5 + 2.0 * dt * lam / delta
    b1 = phi.coefficients * (1.0 + dt * lam * S) - dt * lam * N_hat / eps
    b2 = v.coefficients + dt * q.coefficients - 0.5 * one_hat

    det = a11 * a22 - a12 * a21
    phi_hat = (b1 * a22 - a12 * b2) / det
    w_hat = (a11 * b2 - a21 * b1) / det
    v_hat = 0.5 * (w_hat + one_hat + phi_hat)
    return SurfaceField.from_coefficients(g, phi_hat), SurfaceField.from_coefficients(g, v_hat)


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def potentials(state: FullState, p: ModelParams) -> Tuple[SurfaceField, SurfaceField]:
    """Chemical potentials (mu, theta)."""
    return surface_potentials(state.phi, state.v, p)


def energy(state: FullState, p: ModelParams, law: Optional[ExchangeLaw] = None) -> EnergyReport:
    """Free energy, bulk energy, dissipation rates and exchange work of a state."""
    mu, theta = potentials(state, p)
    F = surface_free_energy(state.phi, state.v, p)
    E_bulk = 0.5 * bulk_l2_norm_sq(state.u)
    exch = float("nan")
    if law is not None:
        u_trace = bulk_trace(state.u)
        q = eval_q(law, u_trace, state.v, theta)
        exch = surface_integral(q * (theta - u_trace))
    return EnergyReport(
        F=F,
        E_bulk=E_bulk,
        E_total=F + E_bulk,
        gnorm_mu=surface_gradient_norm_sq(mu),
        gnorm_theta=surface_gradient_norm_sq(theta),
        gnorm_u=p.D * bulk_gradient_norm_sq(state.u),
        exch=exch,
    )


def masses(state: FullState) -> MassReport:
    return MassReport(
        m=surface_integral(state.phi),
        M_total=bulk_integral(state.u) + surface_integral(state.v),
    )


def _check_finite(new_state, old_state, label: str):
    if not new_state.is_finite():
        raise NumericalFailureException(
            f"{label}: non-finite values at t={new_state.t:.6g}", last_state=old_state
        )
    return new_state


def step_imex(state: FullState, p: ModelParams, law: ExchangeLaw) -> FullState:
    """One first-order IMEX step of the full system."""
    slab = state.slab
    u_trace = bulk_trace(state.u)
    _, theta = potentials(state, p)
    # single evaluation of q feeds both the bulk and the surface update
    q = eval_q(law, u_trace, state.v, theta)

    phi_new, v_new = surface_imex_solve(state.phi, state.v, q, p)

    flux = (slab.boundary_weights[None, None, :] / slab.H) * q.coefficients[..., None]
    u_hat = (state.u.coefficients - p.dt * flux) / (1.0 + p.dt * p.D * slab.eigenvalues)
    u_new = BulkField.from_coefficients(slab, u_hat)

    new_state = FullState(t=state.t + p.dt, u=u_new, phi=phi_new, v=v_new)
    return _check_finite(new_state, state, "step_imex")


def galerkin_rhs(phi_hat: np.ndarray, v_hat: np.ndarray, u_hat: np.ndarray,
                 slab, p: ModelParams, law: ExchangeLaw):
    """Right-hand side of the semi-discrete Galerkin ODE for all coefficients."""
    g = slab.base
    lam = g.k_squared
    phi = SurfaceField.from_coefficients(g, phi_hat)
    v = SurfaceField.from_coefficients(g, v_hat)
    u = BulkField.from_coefficients(slab, u_hat)
    mu, theta = surface_potentials(phi, v, p)
    q = eval_q(law, bulk_trace(u), v, theta)

    dphi = -lam * mu.coefficients
    dv = -lam * theta.coefficients + q.coefficients
    flux = (slab.boundary_weights[None, None, :] / slab.H) * q.coefficients[..., None]
    du = -p.D * slab.eigenvalues * u_hat - flux
    return dphi, dv, du


def explicit_step_limit(state: FullState, p: ModelParams, law: ExchangeLaw) -> float:
    """Largest RK4 step admitted by a spectral-radius bound of the Galerkin ODE."""
    slab = state.slab
    lam_max = float(np.max(slab.base.k_squared))
    surface_rate = lam_max * (p.eps * lam_max + 8.0 / p.eps + 3.0 / p.delta)
    surface_rate = max(surface_rate, 6.0 * lam_max / p.delta)
    bulk_rate = p.D * float(np.max(slab.eigenvalues))
    u_max = float(np.max(np.abs(state.u.values)))
    v_max = float(np.max(np.abs(state.v.values)))
    q_scale = law.c + law.c1 * (1.0 + u_max + v_max) + law.c2
    exchange_rate = q_scale * (4.0 / p.delta + 2.0 * slab.Mz / slab.H)
    rho = max(surface_rate, bulk_rate) + exchange_rate
    return RK4_STABILITY_LIMIT / rho


def reference_rk4(state: FullState, p: ModelParams, law: ExchangeLaw,
                  dt_ref: float, steps: int) -> FullState:
    """
    Classical RK4 on the exact finite-dimensional Galerkin system.

    Intended for small grids as a brute-force oracle for step_imex.
    """
    dt_max = explicit_step_limit(state, p, law)
    if dt_ref > dt_max:
        raise StepSizeException(dt_ref, dt_max)

    slab = state.slab
    y = (np.array(state.phi.coefficients), np.array(state.v.coefficients),
         np.array(state.u.coefficients))
    current = state
    for n in range(steps):
        k1 = galerkin_rhs(*y, slab, p, law)
        k2 = galerkin_rhs(*(a + 0.5 * dt_ref * b for a, b in zip(y, k1)), slab, p, law)
        k3 = galerkin_rhs(*(a + 0.5 * dt_ref * b for a, b in zip(y, k2)), slab, p, law)
        k4 = galerkin_rhs(*(a + dt_ref * b for a, b in zip(y, k3)), slab, p, law)
        y = tuple(a + dt_ref / 6.0 * (b1 + 2.0 * b2 + 2.0 * b3 + b4)
                  for a, b1, b2, b3, b4 in zip(y, k1, k2, k3, k4))
        new_state = FullState(
            t=state.t + (n + 1) * dt_ref,
            u=BulkField.from_coefficients(slab, y[2]),
            phi=SurfaceField.from_coefficients(slab.base, y[0]),
            v=SurfaceField.from_coefficients(slab.base, y[1]),
        )
        current = _check_finite(new_state, current, "reference_rk4")
    return current


def dissipation_check(prev: FullState, next_state: FullState, p: ModelParams,
                      law: ExchangeLaw) -> DissipationReport:
    """
    Residual of d/dt E_total + D|grad u|^2 + |grad mu|^2 + |grad theta|^2 - exch,
    with rates evaluated at the midpoint of the two states.
    """
    e0 = energy(prev, p, law)
    e1 = energy(next_state, p, law)
    dt = next_state.t - prev.t
    if dt <= 0:
        dt = p.dt
    dE_dt = (e1.E_total - e0.E_total) / dt
    dissipation = 0.5 * (e0.gnorm_mu + e1.gnorm_mu + e0.gnorm_theta + e1.gnorm_theta
                         + e0.gnorm_u + e1.gnorm_u)
    exch = 0.5 * (e0.exch + e1.exch)

    exch_nonpositive = None
    if law.kind == EQUILIBRIUM:
        exch_nonpositive = bool(e0.exch <= 1e-12 and e1.exch <= 1e-12)

    return DissipationReport(
        residual=dE_dt + dissipation - exch,
        dE_dt=dE_dt,
        dissipation=dissipation,
        exch=exch,
        exch_nonpositive=exch_nonpositive,
        details={"E_prev": e0.E_total, "E_next": e1.E_total},
    )
