"""
Logging Configuration
Console logging plus structured JSON logs on disk for simulation runs.
"""

import logging
import os
import sys
from pathlib import Path
from typing import Any, Dict

from dotenv import load_dotenv
from pythonjsonlogger import jsonlogger

load_dotenv()


def setup_logger(name: str, log_level: str = None) -> logging.Logger:
    """
    Set up a logger with console and JSON file handlers.

    Args:
        name: Logger name (usually __name__)
        log_level: Logging level (DEBUG, INFO, WARNING, ERROR); defaults to $LOG_LEVEL

    Returns:
        Configured logger instance
    """
    level = (log_level or os.getenv("LOG_LEVEL", "INFO")).upper()
    logger = logging.getLogger(name)
    logger.setLevel(getattr(logging, level, logging.INFO))

    # Avoid duplicate handlers
    if logger.handlers:
        return logger

    console_handler = logging.StreamHandler(sys.stdout)
    console_handler.setLevel(logging.INFO)
    console_handler.setFormatter(logging.Formatter('%(levelname)s - %(message)s'))
    logger.addHandler(console_handler)

    log_dir = Path(os.getenv("RAFTSIM_LOG_DIR", "logs"))
    try:
        log_dir.mkdir(parents=True, exist_ok=True)
        file_handler = logging.FileHandler(log_dir / "raftsim.log")
    except OSError:
        # read-only working directory: console only
        return logger
    file_handler.setLevel(logging.DEBUG)
    file_handler.setFormatter(jsonlogger.JsonFormatter(
        '%(asctime)s %(name)s %(levelname)s %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    ))
    logger.addHandler(file_handler)

    return logger


run_logger = setup_logger("raftsim.run")


def log_step_diagnostics(step: int, t: float, masses: Dict[str, float], energies: Dict[str, float]):
    """Log conserved quantities and energies of one output step."""
    run_logger.debug(
        f"STEP {step} | t={t:.6g} | m={masses.get('m', float('nan')):.12g} "
        f"| M={masses.get('M_total', float('nan')):.12g} | F={energies.get('F', float('nan')):.6g}",
        extra={"step": step, "t": t, **masses, **energies},
    )


def log_sweep_point(kind: str, value: float, observables: Dict[str, Any]):
    """Log one member of a parameter sweep."""
    summary = ", ".join(f"{k}={v:.4g}" if isinstance(v, float) else f"{k}={v}"
                        for k, v in observables.items())
    run_logger.info(f"SWEEP {kind} | value={value:g} | {summary}")


def log_run_summary(model: str, steps: int, duration: float):
    """Log completion of a simulation run."""
    run_logger.info(f"RUN {model} | steps={steps} | duration={duration:.2f}s")
