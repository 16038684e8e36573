"""
Diagnostics Collection
Per-step conservation and energy diagnostics for simulation runs.
"""

import csv
import json
import math
import time
from collections import defaultdict, deque
from dataclasses import asdict, dataclass
from datetime import datetime
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence, Union

from utils.logger import setup_logger

logger = setup_logger(__name__)


@dataclass
class RunSummary:
    """Aggregate diagnostics of one run."""
    steps_recorded: int = 0
    max_mass_drift: float = 0.0
    max_total_mass_drift: float = 0.0
    max_F: float = 0.0
    final_F: float = float("nan")
    energy_monotone: bool = True
    max_energy_increase: float = 0.0
    max_exch: float = float("-inf")
    min_phi: float = float("inf")
    max_phi: float = float("-inf")
    all_finite: bool = True


class DiagnosticsCollector:
    """
    Collects diagnostic rows of a run and keeps running aggregates.

    The aggregates cover every recorded row even when the row history is bounded.
    """

    def __init__(self, columns: Sequence[str], max_history: Optional[int] = None,
                 energy_tolerance: float = 1e-9):
        """
        Initialize diagnostics collector.

        Args:
            columns: CSV column names, in output order
            max_history: Maximum number of rows kept in memory (None keeps all)
            energy_tolerance: relative slack when judging E_total monotonicity
        """
        self.columns = list(columns)
        self.max_history = max_history
        self.rows: deque = deque(maxlen=max_history)
        self.energy_tolerance = energy_tolerance
        self.start_time = time.time()

        self.counters = defaultdict(int)
        self._first: Dict[str, float] = {}
        self._last: Dict[str, float] = {}
        self._summary = RunSummary()

        logger.debug(f"DiagnosticsCollector initialized ({len(self.columns)} columns)")

    def record_step(self, **values: float):
        """Record one diagnostics row; unknown columns are rejected."""
        unknown = set(values) - set(self.columns)
        if unknown:
            raise KeyError(f"Unknown diagnostic columns: {sorted(unknown)}")
        row = {c: float(values.get(c, float("nan"))) for c in self.columns}
        self.rows.append(row)
        self.counters['rows'] += 1
        self._update(row)

    def _update(self, row: Dict[str, float]):
        s = self._summary
        s.steps_recorded += 1
        if not self._first:
            self._first = dict(row)
        if any(not math.isfinite(v) for k, v in row.items() if k in ("F", "E_total", "m", "M_total")):
            s.all_finite = False

        if "m" in row and math.isfinite(row["m"]):
            s.max_mass_drift = max(s.max_mass_drift, abs(row["m"] - self._first["m"]))
        if "M_total" in row and math.isfinite(row["M_total"]):
            s.max_total_mass_drift = max(s.max_total_mass_drift,
                                         abs(row["M_total"] - self._first["M_total"]))
        if "F" in row and math.isfinite(row["F"]):
            s.max_F = max(s.max_F, row["F"])
            s.final_F = row["F"]
        if "E_total" in row and self._last.get("E_total") is not None:
            increase = row["E_total"] - self._last["E_total"]
            s.max_energy_increase = max(s.max_energy_increase, increase)
            if increase > self.energy_tolerance * (1.0 + abs(self._last["E_total"])):
                s.energy_monotone = False
        if "exch" in row and math.isfinite(row["exch"]):
            s.max_exch = max(s.max_exch, row["exch"])
        if "min_phi" in row:
            s.min_phi = min(s.min_phi, row["min_phi"])
        if "max_phi" in row:
            s.max_phi = max(s.max_phi, row["max_phi"])
        self._last = dict(row)

    def summary(self) -> RunSummary:
        return self._summary

    def column(self, name: str) -> List[float]:
        return [row[name] for row in self.rows]

    def export_csv(self, filepath: Union[str, Path]):
        """Write the row history as CSV."""
        filepath = Path(filepath)
        filepath.parent.mkdir(parents=True, exist_ok=True)
        with open(filepath, 'w', newline='') as f:
            writer = csv.DictWriter(f, fieldnames=self.columns)
            writer.writeheader()
            for row in self.rows:
                writer.writerow({k: repr(v) for k, v in row.items()})
        logger.info(f"📊 Diagnostics exported to {filepath}")

    def export_summary(self, filepath: Union[str, Path], extra: Optional[Dict[str, Any]] = None):
        """Export the run summary (plus optional run metadata) as JSON."""
        data = {
            'summary': asdict(self._summary),
            'rows': self.counters['rows'],
            'wall_seconds': time.time() - self.start_time,
            'export_timestamp': datetime.now().isoformat(),
        }
        if extra:
            data.update(extra)
        filepath = Path(filepath)
        filepath.parent.mkdir(parents=True, exist_ok=True)
        with open(filepath, 'w') as f:
            json.dump(data, f, indent=2, default=str)
        logger.info(f"📊 Summary exported to {filepath}")

    def reset(self):
        """Reset all rows and aggregates."""
        self.rows.clear()
        self.counters.clear()
        self._first = {}
        self._last = {}
        self._summary = RunSummary()
        self.start_time = time.time()
        logger.debug("🔄 Diagnostics reset")


def write_table(filepath: Union[str, Path], columns: Sequence[str], rows: Sequence[Dict[str, Any]]):
    """Write a list of dict rows (sweep tables) as CSV."""
    filepath = Path(filepath)
    filepath.parent.mkdir(parents=True, exist_ok=True)
    with open(filepath, 'w', newline='') as f:
        writer = csv.DictWriter(f, fieldnames=list(columns))
        writer.writeheader()
        for row in rows:
            writer.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in row.items()})
    logger.info(f"📊 Table exported to {filepath}")
