"""
Simulation Defaults
Reference configuration, numerical tolerances and output contracts.
"""

from typing import Dict, List

# Reference configuration used by tests and as CLI defaults
REFERENCE_GEOMETRY: Dict[str, float] = {
    "L": 1.0,
    "N": 64,
    "H": 1.0,
    "Mz": 16,
}

REFERENCE_MODEL: Dict[str, float] = {
    "eps": 0.04,
    "delta": 0.1,
    "D": 1.0,
    "dt": 1e-4,
    "t_end": 1.0,
}

REFERENCE_EXCHANGE: Dict[str, float] = {
    "c": 1.0,
    "c1": 1.0,
    "c2": 1.0,
}

REFERENCE_INITIAL: Dict[str, float] = {
    "phi_mean": -0.4,
    "mass_total": 1.0,
    "u0": 0.5,
    "noise": 0.05,
    "seed": 42,
}

# Smallest admissible interface width / affinity parameter
MIN_SMALL_PARAMETER: float = 1e-8

# Mean of a right-hand side above which a pure Poisson solve is singular
SINGULAR_MEAN_TOL: float = 1e-10

# RK4 stability interval on the negative real axis
RK4_STABILITY_LIMIT: float = 2.78

# Stationary solver
DEFAULT_DAMPING: float = 0.5
DEFAULT_STATIONARY_TOL: float = 1e-9
DEFAULT_STATIONARY_MAX_ITERS: int = 2000
DEFAULT_NEWTON_TOL: float = 1e-11
DEFAULT_NEWTON_MAX_ITERS: int = 50
# Damped sweeps between Newton-Krylov attempts on the coupled stationary system
DEFAULT_POLISH_EVERY: int = 50

# Number of Fourier modes per axis used for smooth initial data
SMOOTH_PROFILE_MODES: int = 3

# Snapshot file format
SNAPSHOT_MAGIC: bytes = b"RAFT1"
SNAPSHOT_KIND_SURFACE: int = 0
SNAPSHOT_KIND_BULK: int = 1

# CSV column contracts
FULL_CSV_COLUMNS: List[str] = [
    "t", "m", "M_total", "F", "E_total", "gnorm_mu", "gnorm_theta",
    "gnorm_u", "exch", "min_phi", "max_phi",
]
REDUCED_CSV_COLUMNS: List[str] = FULL_CSV_COLUMNS + [
    "u", "u_inf_residual", "F_split", "react_theta", "react_cross",
]
OK_CSV_COLUMNS: List[str] = ["t", "m", "F_ok", "u", "u_inf_residual", "min_phi", "max_phi"]
DELTA_SWEEP_COLUMNS: List[str] = ["delta", "error_L2", "u_final"]
D_SWEEP_COLUMNS: List[str] = ["D", "grad_u_integral", "e_red", "u_trace_mean", "u_reduced"]
REFINE_COLUMNS: List[str] = ["kind", "value", "error", "order"]
STATIONARY_COLUMNS: List[str] = ["iteration", "res_mu", "res_theta", "res_def", "res_q", "res_mass"]

# PGM output
PGM_MAXVAL: int = 65535
