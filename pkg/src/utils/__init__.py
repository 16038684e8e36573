"""
Utils Package
Utilities for configuration, logging, diagnostics and exception handling.
"""

from .config import (
    get_settings,
    load_config,
    dump_config,
    parse_config,
    Settings,
    RunConfig,
    GeometryConfig,
    ModelConfig,
    ExchangeConfig,
    InitialConfig,
    OutputConfig,
)
from .logger import setup_logger, log_step_diagnostics, log_sweep_point, log_run_summary, run_logger
from .exceptions import (
    RaftSimException,
    ConfigurationException,
    GeometryMismatchException,
    SingularSystemException,
    NumericalFailureException,
    StepSizeException,
    NonConvergenceException,
    ConditionViolatedException,
    UnsupportedLawException,
    SnapshotFormatException,
)

__all__ = [
    'get_settings',
    'load_config',
    'dump_config',
    'parse_config',
    'Settings',
    'RunConfig',
    'GeometryConfig',
    'ModelConfig',
    'ExchangeConfig',
    'InitialConfig',
    'OutputConfig',
    'setup_logger',
    'log_step_diagnostics',
    'log_sweep_point',
    'log_run_summary',
    'run_logger',
    'RaftSimException',
    'ConfigurationException',
    'GeometryMismatchException',
    'SingularSystemException',
    'NumericalFailureException',
    'StepSizeException',
    'NonConvergenceException',
    'ConditionViolatedException',
    'UnsupportedLawException',
    'SnapshotFormatException',
]
