#!/usr/bin/env python3
"""
Script to record the long-time free-energy threshold of the reduced model
Usage: python record_pilot_threshold.py [--t-end 50] [--dt 5e-4]

Runs the non-equilibrium reduced model at the reference configuration and
writes max_t F to data/pilot_thresholds.json, where the long-time test reads it.
"""

import sys
import os
import json
import argparse
from pathlib import Path

from dotenv import load_dotenv
from tqdm import tqdm

project_root = Path(__file__).parent.parent
load_dotenv(project_root / '.env')

# Add src to path
sys.path.insert(0, os.path.join(os.path.dirname(__file__), '../src'))

from dynamics_full import surface_free_energy  # noqa: E402
from dynamics_reduced import step_reduced  # noqa: E402
from experiments import initial_state  # noqa: E402
from utils.config import parse_config  # noqa: E402


def main():
    parser = argparse.ArgumentParser(
        description='Record the reduced-model free-energy maximum for the long-time test'
    )
    parser.add_argument('--t-end', type=float, default=50.0, help='final time (default: 50)')
    parser.add_argument('--dt', type=float, default=5e-4, help='time step (default: 5e-4)')
    parser.add_argument(
        '--output',
        default=str(project_root / 'data' / 'pilot_thresholds.json'),
        help='threshold file to update'
    )
    args = parser.parse_args()

    config = parse_config({"model": "reduced", "params": {"dt": args.dt, "t_end": args.t_end}})
    p, law = config.to_params(), config.to_law()
    state = initial_state(config)

    F_max = surface_free_energy(state.phi, state.v, p)
    for _ in tqdm(range(p.steps), desc="pilot"):
        state = step_reduced(state, p, law)
        F_max = max(F_max, surface_free_energy(state.phi, state.v, p))

    output = Path(args.output)
    data = json.loads(output.read_text()) if output.exists() else {}
    data[f"reduced_F_max_T{args.t_end:g}"] = F_max
    output.parent.mkdir(parents=True, exist_ok=True)
    output.write_text(json.dumps(data, indent=2))
    print(f"✅ max F = {F_max:.6g} written to {output}")


if __name__ == "__main__":
    main()
