"""
Main Application Entry Point
raftsim - bulk-surface lipid raft phase-field simulations

Subcommands:
- run          integrate the configured model (full, reduced, ok or stationary)
- sweep-D      large-diffusion sweep of the full model against the reduced model
- sweep-delta  small-delta sweep of the reduced model against the Ohta-Kawasaki limit
- refine       self-convergence study in dt and N
- stationary   damped fixed-point solve for a stationary state

Exit codes: 0 success, 2 configuration or input error, 3 numerical failure.
"""

import argparse
import sys
from typing import List, Optional

from dotenv import load_dotenv

from experiments import SweepResult, refinement_study, run, run_stationary, sweep_D, sweep_delta
from utils.config import RunConfig, dump_config, load_config, parse_config
from utils.exceptions import (
    ConfigurationException,
    GeometryMismatchException,
    NonConvergenceException,
    NumericalFailureException,
    RaftSimException,
    SnapshotFormatException,
)
from utils.logger import setup_logger

load_dotenv()

logger = setup_logger(__name__)

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3


def _float_list(text: str) -> List[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got '{text}'")


def _int_list(text: str) -> List[int]:
    try:
        return [int(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got '{text}'")


def _seed(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="raftsim",
        description="Bulk-surface phase-field simulations of lipid raft formation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p: argparse.ArgumentParser):
        p.add_argument("--config", help="JSON run configuration (defaults to the reference setup)")
        p.add_argument("--out", help="output directory (overrides output.out_dir)")
        p.add_argument("--seed", type=_seed, help="RNG seed for the initial perturbation")

    p_run = sub.add_parser("run", help="integrate the configured model")
    common(p_run)
    p_run.add_argument("--progress", action="store_true", help="show a progress bar")

    p_d = sub.add_parser("sweep-D", help="full model over a list of bulk diffusivities")
    common(p_d)
    p_d.add_argument("--D-list", dest="D_list", type=_float_list)
    p_d.add_argument("--t-end", dest="t_end", type=float)

    p_delta = sub.add_parser("sweep-delta", help="reduced model against the Ohta-Kawasaki limit")
    common(p_delta)
    p_delta.add_argument("--deltas", type=_float_list)
    p_delta.add_argument("--t-end", dest="t_end", type=float)

    p_ref = sub.add_parser("refine", help="self-convergence in dt and N")
    common(p_ref)
    p_ref.add_argument("--N-list", dest="N_list", type=_int_list)
    p_ref.add_argument("--dt-list", dest="dt_list", type=_float_list)

    p_st = sub.add_parser("stationary", help="fixed-point solve for a stationary state")
    common(p_st)
    p_st.add_argument("--m", type=float, help="surface mean of phi")
    p_st.add_argument("--M", type=float, help="total cholesterol mass")
    p_st.add_argument("--eps", type=float)
    p_st.add_argument("--delta", type=float)
    p_st.add_argument("--law", choices=["equilibrium", "noneq", "noneq_cutoff"])
    return parser


def _override(config: RunConfig, section: str, **values) -> RunConfig:
    values = {k: v for k, v in values.items() if v is not None}
    if not values:
        return config
    data = config.model_dump()
    data[section].update(values)
    return parse_config(data)


def resolve_config(args: argparse.Namespace) -> RunConfig:
    config = load_config(args.config) if args.config else RunConfig()
    if args.out:
        config = _override(config, "output", out_dir=args.out)
    if args.seed is not None:
        config = _override(config, "initial", seed=args.seed)
    if getattr(args, "t_end", None) is not None:
        config = _override(config, "params", t_end=args.t_end)
    if args.command == "stationary":
        config = _override(config, "initial", phi_mean=args.m, mass_total=args.M)
        config = _override(config, "params", eps=args.eps, delta=args.delta)
        config = _override(config, "exchange", kind=args.law)
        config = config.model_copy(update={"model": "stationary"})
    return config


def _print_sweep(result: SweepResult):
    print(f"\n📈 {result.parameter} sweep")
    for name, values in result.observables.items():
        formatted = ", ".join(f"{v:.6g}" for v in values)
        print(f"  {name}: [{formatted}]")
    if result.slope is not None:
        residual = f"{result.fit_residual:.3g}" if result.fit_residual is not None else "n/a"
        print(f"  log-log slope: {result.slope:.4f} (residual {residual})")


def dispatch(args: argparse.Namespace) -> None:
    config = resolve_config(args)
    out = config.output.out_dir
    dump_config(config, f"{out}/config.json")

    if args.command == "run":
        artifacts = run(config, show_progress=args.progress)
        s = artifacts.summary
        print(f"\n✅ {config.model} run finished: {artifacts.steps} steps, "
              f"{len(artifacts.snapshots)} snapshots in {artifacts.out_dir}")
        print(f"  max |dm| = {s.max_mass_drift:.3e}, max |dM| = {s.max_total_mass_drift:.3e}, "
              f"energy monotone: {s.energy_monotone}")
    elif args.command == "sweep-D":
        _print_sweep(sweep_D(config, args.D_list or config.sweeps.D_list, out))
    elif args.command == "sweep-delta":
        _print_sweep(sweep_delta(config, args.deltas or config.sweeps.deltas, out))
    elif args.command == "refine":
        _print_sweep(refinement_study(config, args.N_list or config.sweeps.N_list,
                                      args.dt_list or config.sweeps.dt_list, out))
    elif args.command == "stationary":
        artifacts = run_stationary(config)
        sol = artifacts.final_state
        print(f"\n✅ Stationary solution after {sol.iterations} iterations: "
              f"u = {sol.u_mean:.12g}, v_mean = {sol.v_mean:.12g}")
        for name, value in sol.residuals.items():
            print(f"  {name}: {value:.3e}")


def main(argv: Optional[List[str]] = None) -> int:
    """CLI entry point; returns the process exit code."""
    args = build_parser().parse_args(argv)
    try:
        dispatch(args)
    except ConfigurationException as e:
        logger.error(f"❌ Configuration error: {e}")
        for err in e.errors:
            logger.error(f"   - {err}")
        return EXIT_CONFIG
    except (SnapshotFormatException, GeometryMismatchException) as e:
        logger.error(f"❌ Invalid input: {e}")
        return EXIT_CONFIG
    except (NumericalFailureException, NonConvergenceException) as e:
        logger.error(f"❌ Numerical failure: {e}")
        return EXIT_NUMERICAL
    except RaftSimException as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
