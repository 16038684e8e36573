"""
Stationary Solver
Stationary states of the reduced model: mean-value solve, monotone semilinear
Newton solve and the damped fixed-point iteration built from them.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Tuple

import numpy as np
from scipy.optimize import NoConvergence, brentq, newton_krylov
from scipy.sparse.linalg import LinearOperator, gmres

from constants import (
    DEFAULT_DAMPING,
    DEFAULT_NEWTON_MAX_ITERS,
    DEFAULT_NEWTON_TOL,
    DEFAULT_POLISH_EVERY,
    DEFAULT_STATIONARY_MAX_ITERS,
    DEFAULT_STATIONARY_TOL,
    SINGULAR_MEAN_TOL,
)
from dynamics_full import ModelParams, double_well_prime
from dynamics_reduced import ReducedState, u_fixed_point
from exchange import EQUILIBRIUM, NONEQ, ExchangeLaw
from spectral_core import (
    SlabGeometry,
    SurfaceField,
    dealias_cubic,
    laplace_beltrami,
    mean_free_project,
    solve_surface_helmholtz,
    surface_integral,
)
from utils.exceptions import (
    ConfigurationException,
    ConditionViolatedException,
    NonConvergenceException,
    SingularSystemException,
)
from utils.logger import setup_logger

logger = setup_logger(__name__)


@dataclass
class StationaryConfig:
    phi_mean: float
    mass_total: float
    law: ExchangeLaw
    params: ModelParams
    slab: SlabGeometry
    damping: float = DEFAULT_DAMPING
    tol: float = DEFAULT_STATIONARY_TOL
    max_iters: int = DEFAULT_STATIONARY_MAX_ITERS
    newton_tol: float = DEFAULT_NEWTON_TOL
    continuation_steps: int = 0
    polish_every: int = DEFAULT_POLISH_EVERY

    def __post_init__(self):
        if self.tol <= 0:
            raise ConfigurationException(f"tol must be positive, got {self.tol}")
        if not 0.0 < self.damping <= 1.0:
            raise ConfigurationException(f"damping must lie in (0, 1], got {self.damping}")
        if self.polish_every < 0:
            raise ConfigurationException(f"polish_every must be >= 0, got {self.polish_every}")


@dataclass
class StationarySolution:
    phi: SurfaceField
    v: SurfaceField
    theta: SurfaceField
    u_mean: float
    v_mean: float
    phi_mean: float
    residuals: Dict[str, float] = field(default_factory=dict)
    history: List[Dict[str, float]] = field(default_factory=list)
    iterations: int = 0

    def to_reduced_state(self, slab: SlabGeometry, t: float = 0.0) -> ReducedState:
        return ReducedState(t=t, u=self.u_mean, phi=self.phi + self.phi_mean,
                            v=self.v + self.v_mean, slab=slab)


def _stationary_q(law: ExchangeLaw, u: float, v: SurfaceField,
                  phi: Optional[SurfaceField], delta: Optional[float]) -> SurfaceField:
    theta = None
    if law.kind == EQUILIBRIUM:
        if phi is None or delta is None:
            raise ConfigurationException("Equilibrium mean-value solve needs phi and delta")
        theta = (2.0 / delta) * (2.0 * v.values - 1.0 - phi.values)
    q = np.broadcast_to(law.pointwise(u, v.values, theta), v.values.shape)
    return dealias_cubic(SurfaceField.from_values(v.geometry, q))


def mean_value_solve(law: ExchangeLaw, v_G: SurfaceField, M: float, volume: float, area: float,
                     phi: Optional[SurfaceField] = None,
                     delta: Optional[float] = None) -> Tuple[float, float]:
    """
    Means (u, v_bar) with integral of q(u, v_G + v_bar) = 0 and |B| u + |G| v_bar = M.

    phi (full phase) and delta are only needed for the equilibrium law.
    """
    if abs(v_G.mean()) > SINGULAR_MEAN_TOL:
        raise SingularSystemException(v_G.mean())
    if M == 0.0 and law.is_noneq:
        return 0.0, 0.0

    if law.kind == NONEQ:
        u = u_fixed_point(law.c1, law.c2, M, volume, area)
        v_bar = law.c1 * u / (law.c1 * u + law.c2)
        return u, v_bar

    u_max = M / volume

    def balance(u: float) -> float:
        v_bar = (M - volume * u) / area
        return surface_integral(_stationary_q(law, u, v_G + v_bar, phi, delta))

    lo, hi = (0.0, u_max) if u_max >= 0 else (u_max, 0.0)
    f_lo, f_hi = balance(lo), balance(hi)
    if f_lo == 0.0:
        u = lo
    elif f_hi == 0.0:
        u = hi
    elif np.sign(f_lo) == np.sign(f_hi):
        raise ConditionViolatedException(
            f"No mean value u in [{lo:g}, {hi:g}] balances the exchange for law '{law.kind}'"
        )
    else:
        u = brentq(balance, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
    return u, (M - volume * u) / area


def convex_operator(phi_G: SurfaceField, eps: float, phi_mean: float = 0.0) -> SurfaceField:
    """A phi = -eps Laplace phi + eps^-1 P (4 (m + phi)^3), cubic dealiased."""
    cubic = SurfaceField.from_values(phi_G.geometry, 4.0 * (phi_mean + phi_G.values) ** 3)
    return mean_free_project(-eps * laplace_beltrami(phi_G) + dealias_cubic(cubic) / eps)


def newton_semilinear(f: SurfaceField, eps: float, tol: float = DEFAULT_NEWTON_TOL,
                      phi_mean: float = 0.0, initial: Optional[SurfaceField] = None,
                      max_iters: int = DEFAULT_NEWTON_MAX_ITERS) -> SurfaceField:
    """
    Solve A phi = f for mean-free phi by Newton's method.

    Linear systems are solved with GMRES preconditioned by the constant-coefficient
    operator -eps Laplace + 12 eps^-1 max (m + phi)^2.
    """
    if abs(f.mean()) > SINGULAR_MEAN_TOL:
        raise SingularSystemException(f.mean())
    g = f.geometry
    shape = (g.N, g.N)
    f = mean_free_project(f)
    phi = mean_free_project(initial) if initial is not None else SurfaceField.zeros(g)

    n = g.N * g.N
    residual = convex_operator(phi, eps, phi_mean) - f
    history = [residual.max_abs()]
    for _ in range(max_iters):
        if history[-1] <= tol:
            return phi
        weight = 12.0 * (phi_mean + phi.values) ** 2 / eps
        shift = float(np.max(weight))

        def jacobian(x: np.ndarray) -> np.ndarray:
            dx = mean_free_project(SurfaceField.from_values(g, x.reshape(shape)))
            out = -eps * laplace_beltrami(dx) + dealias_cubic(
                SurfaceField.from_values(g, weight * dx.values))
            return mean_free_project(out).values.ravel()

        def precondition(x: np.ndarray) -> np.ndarray:
            rhs = mean_free_project(SurfaceField.from_values(g, x.reshape(shape)))
            return solve_surface_helmholtz(shift, eps, rhs).values.ravel()

        J = LinearOperator((n, n), matvec=jacobian, dtype=float)
        P = LinearOperator((n, n), matvec=precondition, dtype=float)
        step, info = gmres(J, -residual.values.ravel(), M=P, rtol=1e-12, atol=0.01 * tol,
                           restart=50, maxiter=100)
        if info < 0:
            logger.warning(f"GMRES breakdown in Newton step (info={info})")
        phi = phi + mean_free_project(SurfaceField.from_values(g, step.reshape(shape)))
        residual = convex_operator(phi, eps, phi_mean) - f
        history.append(residual.max_abs())
        # stagnation at round-off level
        if history[-1] >= history[-2] and history[-1] <= 1e3 * tol:
            return phi

    if history[-1] <= tol:
        return phi
    raise NonConvergenceException("newton_semilinear", max_iters, history[-1], history)


def stationary_residuals(sol: StationarySolution, cfg: StationaryConfig) -> Dict[str, float]:
    """Sup-norm residuals of the stationary mean-free equations and mean constraints."""
    p, law, slab = cfg.params, cfg.law, cfg.slab
    phi_full = sol.phi + sol.phi_mean
    v_full = sol.v + sol.v_mean
    w_prime = dealias_cubic(SurfaceField.from_values(phi_full.geometry,
                                                     double_well_prime(phi_full.values)))
    mu_G = mean_free_project(-p.eps * laplace_beltrami(sol.phi) + w_prime / p.eps - 0.5 * sol.theta)
    q = _stationary_q(law, sol.u_mean, v_full, phi_full, p.delta)
    theta_eq = laplace_beltrami(sol.theta) + mean_free_project(q)
    definition = sol.theta - (2.0 / p.delta) * (2.0 * sol.v - sol.phi)
    return {
        "res_mu": mu_G.max_abs(),
        "res_theta": theta_eq.max_abs(),
        "res_def": mean_free_project(definition).max_abs(),
        "res_q": abs(surface_integral(q)),
        "res_mass": abs(slab.volume * sol.u_mean + slab.base.area * sol.v_mean - cfg.mass_total),
    }


def residuals_of_state(state: ReducedState, cfg: StationaryConfig) -> Dict[str, float]:
    """Stationary residuals of a time-marched reduced state."""
    p = cfg.params
    theta = (2.0 / p.delta) * (2.0 * state.v - 1.0 - state.phi)
    sol = StationarySolution(
        phi=mean_free_project(state.phi),
        v=mean_free_project(state.v),
        theta=mean_free_project(theta),
        u_mean=state.u,
        v_mean=state.v.mean(),
        phi_mean=state.phi.mean(),
    )
    return stationary_residuals(sol, cfg)


def _theta_map(cfg: StationaryConfig, phi: SurfaceField, v: SurfaceField, tau: float):
    """Mean values from the mean-value solve, then theta_G from Laplace theta_G = -tau P q."""
    p, slab = cfg.params, cfg.slab
    u_mean, v_mean = mean_value_solve(cfg.law, v, cfg.mass_total, slab.volume, slab.base.area,
                                      phi=phi + cfg.phi_mean, delta=p.delta)
    q = _stationary_q(cfg.law, u_mean, v + v_mean, phi + cfg.phi_mean, p.delta)
    theta = solve_surface_helmholtz(0.0, 1.0, tau * mean_free_project(q))
    return theta, u_mean, v_mean


def coupled_residual(cfg: StationaryConfig, phi: SurfaceField,
                     v: SurfaceField) -> Tuple[SurfaceField, SurfaceField]:
    """
    Mean-free residuals (mu_G, Laplace theta_G + P q) of the stationary system in the
    unknowns (phi_G, v_G), with theta_G = (2 / delta)(2 v_G - phi_G).
    """
    p, slab = cfg.params, cfg.slab
    phi_full = phi + cfg.phi_mean
    u_mean, v_mean = mean_value_solve(cfg.law, v, cfg.mass_total, slab.volume, slab.base.area,
                                      phi=phi_full, delta=p.delta)
    theta = (2.0 / p.delta) * (2.0 * v - phi)
    w_prime = dealias_cubic(SurfaceField.from_values(phi.geometry,
                                                     double_well_prime(phi_full.values)))
    mu = mean_free_project(-p.eps * laplace_beltrami(phi) + w_prime / p.eps - 0.5 * theta)
    q = _stationary_q(cfg.law, u_mean, v + v_mean, phi_full, p.delta)
    return mu, laplace_beltrami(theta) + mean_free_project(q)


def _coupled_preconditioner(cfg: StationaryConfig, phi: SurfaceField) -> LinearOperator:
    """Per-mode inverse of the coupled Jacobian with W'' frozen at its largest magnitude."""
    p = cfg.params
    g = phi.geometry
    shape, n = (g.N, g.N), g.N * g.N
    lam = g.k_squared
    w2 = np.abs(12.0 * (phi.values + cfg.phi_mean) ** 2 - 4.0)
    a = max(float(np.max(w2)), 1.0) / p.eps
    a11 = p.eps * lam + a + 1.0 / p.delta
    a12 = -2.0 / p.delta
    a21 = 2.0 * lam / p.delta
    a22 = -4.0 * lam / p.delta
    det = a11 * a22 - a12 * a21
    det[0, 0] = 1.0

    def apply(x: np.ndarray) -> np.ndarray:
        r1 = SurfaceField.from_values(g, np.array(x[:n]).reshape(shape)).coefficients
        r2 = SurfaceField.from_values(g, np.array(x[n:]).reshape(shape)).coefficients
        y1 = (a22 * r1 - a12 * r2) / det
        y2 = (a11 * r2 - a21 * r1) / det
        y1[0, 0] = y2[0, 0] = 0.0
        return np.concatenate([SurfaceField.from_coefficients(g, y1).values.ravel(),
                               SurfaceField.from_coefficients(g, y2).values.ravel()])

    return LinearOperator((2 * n, 2 * n), matvec=apply, dtype=float)


def newton_polish(cfg: StationaryConfig, phi: SurfaceField, v: SurfaceField,
                  max_iters: int = DEFAULT_NEWTON_MAX_ITERS) -> StationarySolution:
    """
    Jacobian-free Newton-Krylov solve of the coupled stationary system from (phi_G, v_G).

    Raises NonConvergenceException when the residuals do not drop below cfg.tol.
    """
    p, slab = cfg.params, cfg.slab
    g = phi.geometry
    shape, n = (g.N, g.N), g.N * g.N

    def split(x: np.ndarray) -> Tuple[SurfaceField, SurfaceField]:
        return (mean_free_project(SurfaceField.from_values(g, np.array(x[:n]).reshape(shape))),
                mean_free_project(SurfaceField.from_values(g, np.array(x[n:]).reshape(shape))))

    def F(x: np.ndarray) -> np.ndarray:
        mu, theta_eq = coupled_residual(cfg, *split(x))
        return np.concatenate([mu.values.ravel(), theta_eq.values.ravel()])

    x0 = np.concatenate([phi.values.ravel(), v.values.ravel()])
    try:
        x = newton_krylov(F, x0, inner_M=_coupled_preconditioner(cfg, phi), method="lgmres",
                          inner_maxiter=50, f_tol=0.5 * cfg.tol, maxiter=max_iters)
    except (NoConvergence, ValueError) as exc:
        last = np.asarray(exc.args[0]) if exc.args and np.ndim(exc.args[0]) == 1 else x0
        raise NonConvergenceException("newton_polish", max_iters,
                                      float(np.max(np.abs(F(last))))) from exc

    phi, v = split(x)
    theta = mean_free_project((2.0 / p.delta) * (2.0 * v - phi))
    u_mean, v_mean = mean_value_solve(cfg.law, v, cfg.mass_total, slab.volume, slab.base.area,
                                      phi=phi + cfg.phi_mean, delta=p.delta)
    sol = StationarySolution(phi=phi, v=v, theta=theta, u_mean=u_mean, v_mean=v_mean,
                             phi_mean=cfg.phi_mean)
    sol.residuals = stationary_residuals(sol, cfg)
    worst = max(sol.residuals.values())
    if not worst < cfg.tol:
        raise NonConvergenceException("newton_polish", max_iters, worst)
    return sol


def _iterate(cfg: StationaryConfig, phi: SurfaceField, v: SurfaceField, tau: float,
             history: List[Dict[str, float]]) -> StationarySolution:
    p = cfg.params
    alpha = cfg.damping
    polish = tau == 1.0 and cfg.polish_every > 0
    for iteration in range(1, cfg.max_iters + 1):
        theta, _, _ = _theta_map(cfg, phi, v, tau)
        rhs = (4.0 * tau / p.eps) * dealias_cubic(phi) + 0.5 * theta
        phi_next = newton_semilinear(rhs, p.eps, cfg.newton_tol, cfg.phi_mean, initial=phi)
        v_target = 0.25 * p.delta * theta + 0.5 * phi_next
        change = max((phi_next - phi).max_abs(), (v_target - v).max_abs())

        phi = mean_free_project((1.0 - alpha) * phi + alpha * phi_next)
        v = mean_free_project((1.0 - alpha) * v + alpha * v_target)

        theta, u_mean, v_mean = _theta_map(cfg, phi, v, tau)
        sol = StationarySolution(phi=phi, v=v, theta=theta, u_mean=u_mean, v_mean=v_mean,
                                 phi_mean=cfg.phi_mean, iterations=iteration)
        if tau == 1.0:
            res = stationary_residuals(sol, cfg)
            converged = max(res.values()) < cfg.tol
        else:
            res = {}
            converged = change < cfg.tol
        history.append(dict(res, change=change, tau=tau))
        if converged:
            sol.residuals = res
            sol.history = history
            return sol

        if polish and iteration % cfg.polish_every == 0:
            try:
                polished = newton_polish(cfg, phi, v)
            except NonConvergenceException as exc:
                logger.debug(f"Newton polish after {iteration} sweeps failed: {exc}")
                continue
            polished.iterations = iteration + 1
            history.append(dict(polished.residuals, change=(polished.phi - phi).max_abs(),
                                tau=tau))
            polished.history = history
            return polished

    raise NonConvergenceException("fixed_point_iterate", cfg.max_iters,
                                  history[-1]["change"],
                                  [h["change"] for h in history])


def fixed_point_iterate(cfg: StationaryConfig, init: SurfaceField,
                        phi_init: Optional[SurfaceField] = None) -> StationarySolution:
    """
    Damped fixed-point iteration for stationary states.

    init is the mean-free v guess; phi_init (mean-free) defaults to 2 * init.
    With continuation_steps > 0 the homotopy weight tau is raised from 0 to 1,
    each stage warm-started from the previous one. At tau = 1, every
    polish_every sweeps a Newton-Krylov solve of the coupled system is tried
    from the current iterate.
    """
    v = mean_free_project(init)
    phi = mean_free_project(phi_init) if phi_init is not None else mean_free_project(2.0 * init)
    history: List[Dict[str, float]] = []

    if cfg.continuation_steps > 0:
        for tau in np.linspace(0.0, 1.0, cfg.continuation_steps + 1)[1:-1]:
            try:
                stage = _iterate(cfg, phi, v, float(tau), history)
            except NonConvergenceException as exc:
                logger.warning(f"Continuation stage tau={tau:.3f} stalled: {exc}")
                continue
            phi, v = stage.phi, stage.v

    sol = _iterate(cfg, phi, v, 1.0, history)
    logger.info(f"Stationary solve converged in {sol.iterations} iterations "
                f"(max residual {max(sol.residuals.values()):.2e})")
    return sol
