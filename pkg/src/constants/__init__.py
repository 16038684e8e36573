"""
Constants Package
Centralized location for simulation defaults, tolerances and file contracts.
"""

from .defaults import (
    REFERENCE_GEOMETRY,
    REFERENCE_MODEL,
    REFERENCE_EXCHANGE,
    REFERENCE_INITIAL,
    MIN_SMALL_PARAMETER,
    SINGULAR_MEAN_TOL,
    RK4_STABILITY_LIMIT,
    DEFAULT_DAMPING,
    DEFAULT_STATIONARY_TOL,
    DEFAULT_STATIONARY_MAX_ITERS,
    DEFAULT_NEWTON_TOL,
    DEFAULT_NEWTON_MAX_ITERS,
    DEFAULT_POLISH_EVERY,
    SMOOTH_PROFILE_MODES,
    SNAPSHOT_MAGIC,
    SNAPSHOT_KIND_SURFACE,
    SNAPSHOT_KIND_BULK,
    FULL_CSV_COLUMNS,
    REDUCED_CSV_COLUMNS,
    OK_CSV_COLUMNS,
    DELTA_SWEEP_COLUMNS,
    D_SWEEP_COLUMNS,
    REFINE_COLUMNS,
    STATIONARY_COLUMNS,
    PGM_MAXVAL,
)

__all__ = [
    'REFERENCE_GEOMETRY',
    'REFERENCE_MODEL',
    'REFERENCE_EXCHANGE',
    'REFERENCE_INITIAL',
    'MIN_SMALL_PARAMETER',
    'SINGULAR_MEAN_TOL',
    'RK4_STABILITY_LIMIT',
    'DEFAULT_DAMPING',
    'DEFAULT_STATIONARY_TOL',
    'DEFAULT_STATIONARY_MAX_ITERS',
    'DEFAULT_NEWTON_TOL',
    'DEFAULT_NEWTON_MAX_ITERS',
    'DEFAULT_POLISH_EVERY',
    'SMOOTH_PROFILE_MODES',
    'SNAPSHOT_MAGIC',
    'SNAPSHOT_KIND_SURFACE',
    'SNAPSHOT_KIND_BULK',
    'FULL_CSV_COLUMNS',
    'REDUCED_CSV_COLUMNS',
    'OK_CSV_COLUMNS',
    'DELTA_SWEEP_COLUMNS',
    'D_SWEEP_COLUMNS',
    'REFINE_COLUMNS',
    'STATIONARY_COLUMNS',
    'PGM_MAXVAL',
]
