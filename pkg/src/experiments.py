"""
Experiments
Run orchestration for all models, asymptotic-regime sweeps, refinement studies
and image output.
"""

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Dict, List, Optional, Sequence, Tuple, Union

import numpy as np
from tqdm import tqdm

from constants import (
    D_SWEEP_COLUMNS,
    DELTA_SWEEP_COLUMNS,
    FULL_CSV_COLUMNS,
    OK_CSV_COLUMNS,
    PGM_MAXVAL,
    REDUCED_CSV_COLUMNS,
    REFINE_COLUMNS,
    SMOOTH_PROFILE_MODES,
    STATIONARY_COLUMNS,
)
from dynamics_full import (
    FullState,
    ModelParams,
    energy,
    masses,
    step_imex,
    surface_free_energy,
    surface_potentials,
)
from dynamics_ok import OKState, delta_sweep, ok_energy, ok_from_reduced, step_ok
from dynamics_reduced import (
    ReducedState,
    reduced_energy_split,
    step_reduced,
    u_rhs_closed_form,
)
from exchange import EQUILIBRIUM, NONEQ, ExchangeLaw, eval_q
from snapshot import read_snapshot, write_snapshot
from spectral_core import (
    BulkField,
    SlabGeometry,
    SurfaceField,
    TorusGeometry,
    bulk_gradient_norm_sq,
    bulk_trace,
    dominant_wavenumber,
    mean_free_project,
    resample,
    surface_gradient_norm_sq,
    surface_integral,
    surface_l2_norm,
)
from stationary import StationaryConfig, fixed_point_iterate, residuals_of_state
from utils.config import RunConfig, get_settings
from utils.exceptions import (
    ConfigurationException,
    GeometryMismatchException,
    NumericalFailureException,
    UnsupportedLawException,
)
from utils.logger import log_run_summary, log_step_diagnostics, log_sweep_point, setup_logger
from utils.metrics import DiagnosticsCollector, RunSummary, write_table

logger = setup_logger(__name__)

State = Union[FullState, ReducedState, OKState]


@dataclass
class RunArtifacts:
    out_dir: Path
    csv_path: Path
    summary_path: Path
    snapshots: List[Path]
    final_state: object
    summary: RunSummary
    steps: int


@dataclass
class SweepResult:
    """Raw per-value observables plus a log-log fit; the fit never replaces raw data."""
    parameter: str
    values: List[float]
    observables: Dict[str, List[float]]
    slope: Optional[float] = None
    intercept: Optional[float] = None
    fit_residual: Optional[float] = None
    extra: Dict[str, object] = field(default_factory=dict)


# ---------------------------------------------------------------------------
# Initial data
# ---------------------------------------------------------------------------

def make_rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def initial_perturbation(torus: TorusGeometry, amplitude: float, seed: int,
                         profile: str = "noise") -> SurfaceField:
    """
    Mean-free perturbation: uniform grid noise, or a smooth band-limited profile
    whose random modes do not depend on the grid size.
    """
    rng = make_rng(seed)
    if profile == "noise":
        values = rng.uniform(-amplitude, amplitude, size=(torus.N, torus.N))
        return mean_free_project(SurfaceField.from_values(torus, values))

    K = SMOOTH_PROFILE_MODES
    x1, x2 = torus.coordinates
    total = np.zeros_like(x1)
    count = 0
    for n1 in range(0, K + 1):
        for n2 in range(-K, K + 1):
            if n1 == 0 and n2 <= 0:
                continue
            a, b = rng.uniform(-1.0, 1.0, size=2)
            arg = 2.0 * np.pi * (n1 * x1 + n2 * x2) / torus.L
            total += a * np.cos(arg) + b * np.sin(arg)
            count += 1
    return SurfaceField.from_values(torus, amplitude * total / np.sqrt(count))


def initial_surface(config: RunConfig, slab: SlabGeometry) -> Tuple[SurfaceField, SurfaceField, float]:
    """phi, well-prepared v (theta_G = 0) and u0."""
    init = config.initial
    torus = slab.base
    if init.snapshot:
        loaded = read_snapshot(init.snapshot)
        if not isinstance(loaded, SurfaceField) or loaded.geometry != torus:
            raise GeometryMismatchException(f"Snapshot {init.snapshot} does not match the run grid")
        phi_G = mean_free_project(loaded)
        phi_mean = loaded.mean()
    else:
        phi_G = initial_perturbation(torus, init.noise, init.seed, init.profile)
        phi_mean = init.phi_mean
    v_mean = (init.mass_total - slab.volume * init.u0) / torus.area
    return phi_G + phi_mean, 0.5 * phi_G + v_mean, init.u0


def initial_state(config: RunConfig) -> State:
    slab = config.to_geometry()
    phi, v, u0 = initial_surface(config, slab)
    if config.model == "full":
        return FullState(t=0.0, u=BulkField.constant(slab, u0), phi=phi, v=v)
    reduced = ReducedState(t=0.0, u=u0, phi=phi, v=v, slab=slab)
    if config.model == "ok":
        return ok_from_reduced(reduced)
    return reduced


# ---------------------------------------------------------------------------
# Per-model stepping and diagnostics
# ---------------------------------------------------------------------------

def _full_row(state: FullState, p: ModelParams, law: ExchangeLaw) -> Dict[str, float]:
    mass = masses(state)
    e = energy(state, p, law)
    return dict(t=state.t, m=mass.m, M_total=mass.M_total, F=e.F, E_total=e.E_total,
                gnorm_mu=e.gnorm_mu, gnorm_theta=e.gnorm_theta, gnorm_u=e.gnorm_u,
                exch=e.exch, min_phi=float(state.phi.values.min()),
                max_phi=float(state.phi.values.max()))


def _reduced_row(state: ReducedState, p: ModelParams, law: ExchangeLaw) -> Dict[str, float]:
    slab = state.slab
    mu, theta = surface_potentials(state.phi, state.v, p)
    F = surface_free_energy(state.phi, state.v, p)
    q = eval_q(law, state.u, state.v, theta)
    M = state.mass_total
    row = dict(t=state.t, m=surface_integral(state.phi), M_total=M, F=F,
               E_total=F + 0.5 * slab.volume * state.u ** 2,
               gnorm_mu=surface_gradient_norm_sq(mu),
               gnorm_theta=surface_gradient_norm_sq(theta), gnorm_u=0.0,
               exch=surface_integral(q * (theta - state.u)), u=state.u,
               min_phi=float(state.phi.values.min()), max_phi=float(state.phi.values.max()))
    if law.kind == NONEQ:
        row["u_inf_residual"] = abs(u_rhs_closed_form(slab.volume * state.u, slab, law.c1, law.c2, M))
        split = reduced_energy_split(state, p, law.c1, law.c2)
        row.update(F_split=split.F_split, react_theta=split.react_theta,
                   react_cross=split.react_cross)
    return row


def _ok_row(state: OKState, p: ModelParams, law: ExchangeLaw) -> Dict[str, float]:
    full = state.phi.values + state.phi_mean
    U = state.slab.volume * state.u
    return dict(t=state.t, m=surface_integral(state.phi) + state.phi_mean * state.slab.base.area,
                F_ok=ok_energy(state, p), u=state.u,
                u_inf_residual=abs(u_rhs_closed_form(U, state.slab, law.c1, law.c2, state.mass_total)),
                min_phi=float(full.min()), max_phi=float(full.max()))


def model_driver(model: str, p: ModelParams, law: ExchangeLaw):
    """(step function, diagnostics row function, CSV columns) for a model name."""
    if model == "full":
        return (lambda s: step_imex(s, p, law)), _full_row, FULL_CSV_COLUMNS
    if model == "reduced":
        return (lambda s: step_reduced(s, p, law)), _reduced_row, REDUCED_CSV_COLUMNS
    if model == "ok":
        if law.kind != NONEQ:
            raise UnsupportedLawException("ok model", law.kind)
        return (lambda s: step_ok(s, p, law.c1, law.c2)), _ok_row, OK_CSV_COLUMNS
    raise ConfigurationException(f"Model '{model}' has no time stepper")


def phase_of(state: State) -> SurfaceField:
    if isinstance(state, OKState):
        return state.phi + state.phi_mean
    return state.phi


def simulate(state: State, step: Callable[[State], State], steps: int,
             on_step: Optional[Callable[[int, State], None]] = None,
             show_progress: bool = False, desc: str = "steps") -> State:
    """Advance a state; on_step(n, state) is called for n = 0..steps."""
    if on_step:
        on_step(0, state)
    iterator = range(1, steps + 1)
    if show_progress:
        iterator = tqdm(iterator, desc=desc)
    for n in iterator:
        state = step(state)
        if on_step:
            on_step(n, state)
    return state


# ---------------------------------------------------------------------------
# Output helpers
# ---------------------------------------------------------------------------

def emit_pgm(f: SurfaceField, path: Union[str, Path]) -> Path:
    """16-bit binary PGM, linear map [min, max] -> [0, 65535], extremes in the comment."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    values = np.asarray(f.values)
    lo, hi = float(values.min()), float(values.max())
    if hi > lo:
        scaled = np.rint((values - lo) / (hi - lo) * PGM_MAXVAL)
    else:
        scaled = np.zeros_like(values)
    rows, cols = values.shape
    header = f"P5\n# min={lo!r} max={hi!r}\n{cols} {rows}\n{PGM_MAXVAL}\n".encode("ascii")
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(scaled.astype(">u2").tobytes())
    return path


def read_pgm(path: Union[str, Path]) -> Tuple[np.ndarray, float, float]:
    """Inverse of emit_pgm: raw 16-bit image and the recorded (min, max)."""
    data = Path(path).read_bytes()
    lines = data.split(b"\n", 4)
    if lines[0] != b"P5":
        raise ValueError(f"{path}: not a binary PGM")
    comment = lines[1].decode("ascii").lstrip("# ").split()
    extremes = dict(item.split("=") for item in comment)
    cols, rows = (int(x) for x in lines[2].split())
    image = np.frombuffer(lines[4], dtype=">u2").reshape(rows, cols)
    return image, float(extremes["min"]), float(extremes["max"])


def fit_loglog(x: Sequence[float], y: Sequence[float]) -> Tuple[float, float, float]:
    """Least-squares line through (log x, log y): slope, intercept, residual sum of squares."""
    if len(x) < 3:
        raise ConfigurationException("A slope fit needs at least 3 points")
    coeffs, residuals, *_ = np.polyfit(np.log(x), np.log(y), 1, full=True)
    residual = float(residuals[0]) if len(residuals) else 0.0
    return float(coeffs[0]), float(coeffs[1]), residual


def _with_seed(config: RunConfig, seed: Optional[int]) -> RunConfig:
    if seed is None:
        return config
    return config.model_copy(update={"initial": config.initial.model_copy(update={"seed": seed})})


def _pool_size(n_jobs: int) -> int:
    return max(1, min(n_jobs, get_settings().threads))


# ---------------------------------------------------------------------------
# Operations
# ---------------------------------------------------------------------------

def run(config: RunConfig, out_dir: Optional[Union[str, Path]] = None,
        seed: Optional[int] = None, show_progress: bool = False) -> RunArtifacts:
    """
    Integrate the configured model to t_end, writing the diagnostics CSV,
    cadence snapshots, the final state and a JSON summary.
    """
    config = _with_seed(config, seed)
    if config.model == "stationary":
        return run_stationary(config, out_dir)

    out = Path(out_dir or config.output.out_dir)
    p, law = config.to_params(), config.to_law()
    step, row_fn, columns = model_driver(config.model, p, law)
    steps = p.steps
    every_csv = config.output.csv_every
    every_snap = config.output.snapshot_every

    collector = DiagnosticsCollector(columns)
    snapshots: List[Path] = []

    def on_step(n: int, state: State):
        last = n == steps
        if n % every_csv == 0 or last:
            row = row_fn(state, p, law)
            collector.record_step(**{k: v for k, v in row.items() if k in columns})
            log_step_diagnostics(n, state.t, {"m": row.get("m", float("nan")),
                                              "M_total": row.get("M_total", float("nan"))},
                                 {"F": row.get("F", row.get("F_ok", float("nan")))})
        if n % every_snap == 0 or last:
            phase = phase_of(state)
            snapshots.append(write_snapshot(phase, out / "snapshots" / f"phi_{n:07d}.raft",
                                            H=config.geometry.H))
            if config.output.pgm:
                emit_pgm(phase, out / "images" / f"phi_{n:07d}.pgm")

    start = time.time()
    state = initial_state(config)
    try:
        state = simulate(state, step, steps, on_step, show_progress, desc=config.model)
    except NumericalFailureException as exc:
        if exc.last_state is not None and hasattr(exc.last_state, "phi"):
            _write_state(exc.last_state, out, config.geometry.H, prefix="failure")
        collector.export_csv(out / "diagnostics.csv")
        raise

    _write_state(state, out, config.geometry.H)
    csv_path = out / "diagnostics.csv"
    collector.export_csv(csv_path)
    summary = collector.summary()
    summary_path = out / "summary.json"
    collector.export_summary(summary_path, extra={
        "model": config.model,
        "exchange": law.kind,
        "equilibrium_regime": law.kind == EQUILIBRIUM,
        "steps": steps,
        "t_final": state.t,
        "dominant_wavenumber": dominant_wavenumber(phase_of(state)),
        "u_final": None if isinstance(state, FullState) else state.u,
        "stationary_residuals": (residuals_of_state(state, stationary_config(config))
                                 if isinstance(state, ReducedState) else None),
    })
    log_run_summary(config.model, steps, time.time() - start)
    return RunArtifacts(out_dir=out, csv_path=csv_path, summary_path=summary_path,
                        snapshots=snapshots, final_state=state, summary=summary, steps=steps)


def _write_state(state: State, out: Path, H: float, prefix: str = "final"):
    """Phase, cholesterol and bulk fields of a state as <prefix>_{phi,v,u}.raft."""
    write_snapshot(phase_of(state), out / f"{prefix}_phi.raft", H=H)
    if isinstance(state, FullState):
        write_snapshot(state.v, out / f"{prefix}_v.raft", H=H)
        write_snapshot(state.u, out / f"{prefix}_u.raft")
    elif isinstance(state, ReducedState):
        write_snapshot(state.v, out / f"{prefix}_v.raft", H=H)


def stationary_config(config: RunConfig) -> StationaryConfig:
    opts = config.stationary
    return StationaryConfig(
        phi_mean=config.initial.phi_mean,
        mass_total=config.initial.mass_total,
        law=config.to_law(),
        params=config.to_params(),
        slab=config.to_geometry(),
        damping=opts.damping,
        tol=opts.tol,
        max_iters=opts.max_iters,
        continuation_steps=opts.continuation_steps,
        polish_every=opts.polish_every,
    )


def run_stationary(config: RunConfig, out_dir: Optional[Union[str, Path]] = None) -> RunArtifacts:
    """Fixed-point solve from the configured initial perturbation; writes snapshot and residuals."""
    out = Path(out_dir or config.output.out_dir)
    cfg = stationary_config(config)
    phi, v, _ = initial_surface(config, cfg.slab)
    start = time.time()
    sol = fixed_point_iterate(cfg, mean_free_project(v), phi_init=mean_free_project(phi))

    collector = DiagnosticsCollector(STATIONARY_COLUMNS)
    for i, record in enumerate(sol.history, start=1):
        collector.record_step(iteration=i, **{k: record[k] for k in STATIONARY_COLUMNS[1:]
                                              if k in record})
    csv_path = out / "stationary_residuals.csv"
    collector.export_csv(csv_path)
    snapshot = write_snapshot(sol.phi + sol.phi_mean, out / "stationary_phi.raft", H=cfg.slab.H)
    write_snapshot(sol.v + sol.v_mean, out / "stationary_v.raft", H=cfg.slab.H)
    summary_path = out / "summary.json"
    collector.export_summary(summary_path, extra={
        "model": "stationary",
        "iterations": sol.iterations,
        "residuals": sol.residuals,
        "u_mean": sol.u_mean,
        "v_mean": sol.v_mean,
        "dominant_wavenumber": dominant_wavenumber(sol.phi),
    })
    log_run_summary("stationary", sol.iterations, time.time() - start)
    return RunArtifacts(out_dir=out, csv_path=csv_path, summary_path=summary_path,
                        snapshots=[snapshot], final_state=sol, summary=collector.summary(),
                        steps=sol.iterations)


def sweep_D(config: RunConfig, D_list: Sequence[float],
            out_dir: Optional[Union[str, Path]] = None) -> SweepResult:
    """
    Full model at each D from identical data: time-integrated bulk gradient norm and
    the gap between the mean trace of u and the reduced model's u at t_end.
    """
    if len(D_list) < 3:
        raise ConfigurationException("sweep_D needs at least 3 values of D")
    base = config.model_copy(update={"model": "full"})
    law = base.to_law()
    p0 = base.to_params()
    steps = p0.steps

    reduced_cfg = base.model_copy(update={"model": "reduced"})
    reduced_final = simulate(initial_state(reduced_cfg),
                             lambda s: step_reduced(s, p0, law), steps)
    u_reduced = reduced_final.u

    def member(D: float) -> Dict[str, float]:
        p = replace(p0, D=float(D))
        integral = [0.0]

        def accumulate(n: int, state: FullState):
            if n > 0:
                integral[0] += p.dt * bulk_gradient_norm_sq(state.u)

        final = simulate(initial_state(base), lambda s: step_imex(s, p, law), steps, accumulate)
        trace_mean = bulk_trace(final.u).mean()
        row = {"D": float(D), "grad_u_integral": integral[0],
               "e_red": abs(trace_mean - u_reduced), "u_trace_mean": trace_mean,
               "u_reduced": u_reduced}
        log_sweep_point("D", D, {"grad_u_integral": row["grad_u_integral"], "e_red": row["e_red"]})
        return row

    with ThreadPoolExecutor(max_workers=_pool_size(len(D_list))) as pool:
        rows = list(pool.map(member, D_list))

    observables = {k: [r[k] for r in rows] for k in D_SWEEP_COLUMNS[1:]}
    slope, intercept, residual = fit_loglog([r["D"] for r in rows], observables["grad_u_integral"])
    result = SweepResult("D", [r["D"] for r in rows], observables, slope, intercept, residual)
    if out_dir is not None:
        write_table(Path(out_dir) / "sweep_D.csv", D_SWEEP_COLUMNS, rows)
        _write_fit(Path(out_dir) / "sweep_D_fit.csv", result)
    return result


def sweep_delta(config: RunConfig, deltas: Sequence[float],
                out_dir: Optional[Union[str, Path]] = None,
                t_end: Optional[float] = None) -> SweepResult:
    """Reduced model at each delta against the Ohta-Kawasaki limit from identical data."""
    base = config.model_copy(update={"model": "reduced"})
    p = base.to_params()
    if t_end is not None:
        p = replace(p, t_end=t_end)
    law = base.to_law()

    def initial(_: ModelParams) -> ReducedState:
        return initial_state(base)

    rows = delta_sweep(initial, p, law, deltas, p.t_end, max_workers=_pool_size(len(deltas)))
    table = [{"delta": r.delta, "error_L2": r.error_L2, "u_final": r.u_final} for r in rows]
    observables = {"error_L2": [r.error_L2 for r in rows], "u_final": [r.u_final for r in rows]}
    result = SweepResult("delta", [r.delta for r in rows], observables)
    if len(rows) >= 3 and all(r.error_L2 > 0 for r in rows):
        result.slope, result.intercept, result.fit_residual = fit_loglog(
            result.values, observables["error_L2"])
    if out_dir is not None:
        write_table(Path(out_dir) / "sweep_delta.csv", DELTA_SWEEP_COLUMNS, table)
        if result.slope is not None:
            _write_fit(Path(out_dir) / "sweep_delta_fit.csv", result)
    return result


def _write_fit(path: Path, result: SweepResult):
    write_table(path, ["parameter", "slope", "intercept", "fit_residual"],
                [{"parameter": result.parameter, "slope": result.slope,
                  "intercept": result.intercept, "fit_residual": result.fit_residual}])


def _final_phase(config: RunConfig, N: int, dt: float) -> SurfaceField:
    geometry = config.geometry.model_copy(update={"N": N})
    params = config.params.model_copy(update={"dt": dt})
    cfg = config.model_copy(update={"geometry": geometry, "params": params})
    p, law = cfg.to_params(), cfg.to_law()
    step, _, _ = model_driver(cfg.model, p, law)
    return phase_of(simulate(initial_state(cfg), step, p.steps))


def observed_orders(errors: Sequence[float], ratios: Sequence[float]) -> List[float]:
    """log(e_i / e_{i+1}) / log(ratio_i)."""
    return [float(np.log(errors[i] / errors[i + 1]) / np.log(ratios[i]))
            for i in range(len(errors) - 1)]


def refinement_study(config: RunConfig, N_list: Sequence[int], dt_list: Sequence[float],
                     out_dir: Optional[Union[str, Path]] = None) -> SweepResult:
    """
    Self-convergence in dt (finest N) and in N (finest dt) on smooth initial data.

    Temporal orders come from differences of successive runs, which cancels the
    unknown exact solution; errors are reported against the finest run.
    """
    if len(N_list) < 3 or len(dt_list) < 3:
        raise ConfigurationException("refinement_study needs at least 3 resolutions of each kind")
    if config.model == "stationary":
        raise ConfigurationException("refinement_study needs a time-dependent model")
    smooth = config.model_copy(update={
        "initial": config.initial.model_copy(update={"profile": "smooth", "snapshot": None})})
    dts = sorted(dt_list, reverse=True)
    Ns = sorted(N_list)
    N_fine, dt_fine = Ns[-1], dts[-1]

    with ThreadPoolExecutor(max_workers=_pool_size(len(dts) + len(Ns))) as pool:
        temporal = list(pool.map(lambda dt: _final_phase(smooth, N_fine, dt), dts))
        spatial = list(pool.map(lambda N: _final_phase(smooth, N, dt_fine), Ns))

    t_err = [surface_l2_norm(phi - temporal[-1]) for phi in temporal[:-1]]
    diffs = [surface_l2_norm(temporal[i] - temporal[i + 1]) for i in range(len(temporal) - 1)]
    t_order = observed_orders(diffs, [dts[i] / dts[i + 1] for i in range(len(dts) - 1)]) \
        if len(diffs) >= 2 else []

    fine_geometry = spatial[-1].geometry
    s_err = [surface_l2_norm(resample(phi, fine_geometry) - spatial[-1]) for phi in spatial[:-1]]

    rows = [{"kind": "dt", "value": dt, "error": e,
             "order": (t_order[i] if i < len(t_order) else float("nan"))}
            for i, (dt, e) in enumerate(zip(dts[:-1], t_err))]
    rows += [{"kind": "N", "value": float(N), "error": e, "order": float("nan")}
             for N, e in zip(Ns[:-1], s_err)]

    result = SweepResult("refine", list(dts), {
        "temporal_error": t_err,
        "temporal_diff": diffs,
        "temporal_order": t_order,
        "spatial_N": [float(N) for N in Ns[:-1]],
        "spatial_error": s_err,
    })
    if t_order:
        result.slope = float(np.mean(t_order))
    if out_dir is not None:
        write_table(Path(out_dir) / "refinement.csv", REFINE_COLUMNS, rows)
    return result
