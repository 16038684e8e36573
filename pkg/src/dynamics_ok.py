"""
Ohta-Kawasaki Limit
Small-affinity limit of the reduced model: a nonlocal Cahn-Hilliard equation for
the mean-free phase, driven by the scalar u(t), and the comparison harness that
measures how close reduced-model runs get to it.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, Dict, List, Optional, Sequence

import numpy as np

from constants import SINGULAR_MEAN_TOL
from dynamics_full import ModelParams, nonlinear_term
from dynamics_reduced import ReducedState, step_reduced, u_rhs_closed_form
from exchange import NONEQ, ExchangeLaw
from spectral_core import (
    SlabGeometry,
    SurfaceField,
    laplace_beltrami,
    mean_free_project,
    solve_surface_helmholtz,
    surface_gradient_norm_sq,
    surface_l2_norm,
)
from utils.exceptions import (
    GeometryMismatchException,
    NumericalFailureException,
    SingularSystemException,
    UnsupportedLawException,
)
from utils.logger import log_sweep_point, setup_logger

logger = setup_logger(__name__)


@dataclass(frozen=True)
class OKState:
    t: float
    phi: SurfaceField
    u: float
    phi_mean: float
    mass_total: float
    slab: SlabGeometry

    def is_finite(self) -> bool:
        return bool(np.isfinite(self.u) and np.all(np.isfinite(self.phi.values)))


@dataclass
class DeltaSweepRow:
    delta: float
    error_L2: float
    u_final: float


def sigma_solve(phi_G: SurfaceField, u: float, c1: float, c2: float) -> SurfaceField:
    """Mean-free sigma with Laplace sigma = ((c1 u + c2) / 2) phi_G."""
    mean = phi_G.mean()
    if abs(mean) > SINGULAR_MEAN_TOL:
        raise SingularSystemException(mean)
    kappa = 0.5 * (c1 * u + c2)
    # -Laplace sigma = -kappa phi_G
    return solve_surface_helmholtz(0.0, 1.0, -kappa * phi_G)


def ok_chemical_potential(state: OKState, p: ModelParams, c1: float, c2: float) -> SurfaceField:
    """mu_G from (5/4) mu_G = -eps Laplace phi_G + eps^-1 P W'(m + phi_G) - sigma / 2."""
    sigma = sigma_solve(state.phi, state.u, c1, c2)
    full = state.phi + state.phi_mean
    rhs = (-p.eps * laplace_beltrami(state.phi)
           + mean_free_project(nonlinear_term(full)) / p.eps
           - 0.5 * sigma)
    return 0.8 * rhs


def ok_energy(state: OKState, p: ModelParams) -> float:
    """Cahn-Hilliard part of the limit energy."""
    g = state.phi.geometry
    full = state.phi.values + state.phi_mean
    well = g.area * float(np.mean((1.0 - full ** 2) ** 2)) / p.eps
    return 0.5 * p.eps * surface_gradient_norm_sq(state.phi) + well


def step_ok(state: OKState, p: ModelParams, c1: float, c2: float) -> OKState:
    """
    One stabilized IMEX step; sigma and W' explicit, linear terms implicit.
    The zero mode is never touched.
    """
    g = state.slab.base
    lam = g.k_squared
    dt, eps, S = p.dt, p.eps, p.s_stab

    sigma_hat = sigma_solve(state.phi, state.u, c1, c2).coefficients
    N_hat = nonlinear_term(state.phi + state.phi_mean).coefficients
    phi_hat = state.phi.coefficients

    explicit = -S * phi_hat + N_hat / eps - 0.5 * sigma_hat
    phi_new = (phi_hat - 0.8 * dt * lam * explicit) / (1.0 + 0.8 * dt * lam * (eps * lam + S))
    phi_new[0, 0] = 0.0

    volume = state.slab.volume
    U = volume * state.u
    U_new = U + dt * u_rhs_closed_form(U, state.slab, c1, c2, state.mass_total)

    new_state = replace(state, t=state.t + dt, u=U_new / volume,
                        phi=SurfaceField.from_coefficients(g, phi_new))
    if not new_state.is_finite():
        raise NumericalFailureException(
            f"step_ok: non-finite values at t={new_state.t:.6g}", last_state=state
        )
    return new_state


def ok_from_reduced(state: ReducedState) -> OKState:
    """Limit-system state carrying the same mean-free phase, u and masses."""
    return OKState(
        t=state.t,
        phi=mean_free_project(state.phi),
        u=state.u,
        phi_mean=state.phi.mean(),
        mass_total=state.mass_total,
        slab=state.slab,
    )


def mean_free_distance(a: SurfaceField, b: SurfaceField) -> float:
    """L2 distance of the mean-free parts."""
    if a.geometry != b.geometry:
        raise GeometryMismatchException("Cannot compare fields on different grids")
    return surface_l2_norm(mean_free_project(a) - mean_free_project(b))


def integrate_ok(state: OKState, p: ModelParams, c1: float, c2: float, steps: int) -> OKState:
    for _ in range(steps):
        state = step_ok(state, p, c1, c2)
    return state


def integrate_reduced(state: ReducedState, p: ModelParams, law: ExchangeLaw, steps: int) -> ReducedState:
    for _ in range(steps):
        state = step_reduced(state, p, law)
    return state


def delta_sweep(initial: Callable[[ModelParams], ReducedState], p: ModelParams, law: ExchangeLaw,
                deltas: Sequence[float], t_end: float,
                max_workers: Optional[int] = None) -> List[DeltaSweepRow]:
    """
    Run the reduced model at each delta and the limit system once from identical
    initial data; report the L2 distance of the mean-free phases at t_end.

    `initial` builds the reduced initial state for given parameters, so that the
    well-prepared v can depend on delta while phi and u stay identical.
    """
    if law.kind != NONEQ:
        raise UnsupportedLawException("delta_sweep", law.kind)
    steps = int(round(t_end / p.dt))

    start = initial(p)
    ok_final = integrate_ok(ok_from_reduced(start), p, law.c1, law.c2, steps)

    def member(delta: float) -> DeltaSweepRow:
        p_delta = replace(p, delta=delta)
        s0 = initial(p_delta)
        if s0.phi.geometry != start.phi.geometry:
            raise GeometryMismatchException("delta sweep members must share one grid")
        final = integrate_reduced(s0, p_delta, law, steps)
        row = DeltaSweepRow(delta=delta,
                            error_L2=mean_free_distance(final.phi, ok_final.phi),
                            u_final=final.u)
        log_sweep_point("delta", delta, {"error_L2": row.error_L2, "u_final": row.u_final})
        return row

    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        rows = list(pool.map(member, deltas))
    return rows


def sweep_table(rows: List[DeltaSweepRow]) -> Dict[str, List[float]]:
    return {
        "delta": [r.delta for r in rows],
        "error_L2": [r.error_L2 for r in rows],
        "u_final": [r.u_final for r in rows],
    }
