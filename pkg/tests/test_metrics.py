"""
Tests for Metrics Module
"""

import csv
import json

import pytest

from constants import FULL_CSV_COLUMNS
from utils.metrics import DiagnosticsCollector, write_table


def row(t, m=-0.4, M_total=1.0, F=1.0, E_total=2.0, **extra):
    return dict(t=t, m=m, M_total=M_total, F=F, E_total=E_total, **extra)


class TestDiagnosticsCollector:
    """Tests for the diagnostics collector."""

    def test_init(self):
        collector = DiagnosticsCollector(FULL_CSV_COLUMNS, max_history=100)
        assert collector.max_history == 100
        assert collector.summary().steps_recorded == 0

    def test_missing_columns_are_nan(self):
        collector = DiagnosticsCollector(FULL_CSV_COLUMNS)
        collector.record_step(t=0.0, m=-0.4)
        assert collector.column("m") == [-0.4]
        assert collector.column("F")[0] != collector.column("F")[0]

    def test_unknown_column(self):
        collector = DiagnosticsCollector(["t", "m"])
        with pytest.raises(KeyError):
            collector.record_step(t=0.0, mass=1.0)

    def test_drift_and_extremes(self):
        collector = DiagnosticsCollector(FULL_CSV_COLUMNS)
        collector.record_step(**row(0.0, min_phi=-0.5, max_phi=-0.3))
        collector.record_step(**row(0.1, m=-0.4 + 1e-13, M_total=1.0 - 2e-12, F=3.0,
                                    min_phi=-0.9, max_phi=0.2))
        s = collector.summary()
        assert s.max_mass_drift == pytest.approx(1e-13, rel=1e-3)
        assert s.max_total_mass_drift == pytest.approx(2e-12, rel=1e-3)
        assert s.max_F == 3.0
        assert (s.min_phi, s.max_phi) == (-0.9, 0.2)
        assert s.all_finite

    def test_energy_monotonicity(self):
        collector = DiagnosticsCollector(FULL_CSV_COLUMNS)
        for t, E in [(0.0, 2.0), (0.1, 1.5), (0.2, 1.5)]:
            collector.record_step(**row(t, E_total=E))
        assert collector.summary().energy_monotone
        collector.record_step(**row(0.3, E_total=1.6))
        assert not collector.summary().energy_monotone
        assert collector.summary().max_energy_increase == pytest.approx(0.1)

    def test_non_finite_flagged(self):
        collector = DiagnosticsCollector(FULL_CSV_COLUMNS)
        collector.record_step(**row(0.0, F=float("inf")))
        assert not collector.summary().all_finite

    def test_bounded_history_keeps_aggregates(self):
        collector = DiagnosticsCollector(FULL_CSV_COLUMNS, max_history=2)
        for i in range(5):
            collector.record_step(**row(float(i), M_total=1.0 + i * 1e-12))
        assert len(collector.rows) == 2
        assert collector.summary().steps_recorded == 5
        assert collector.summary().max_total_mass_drift == pytest.approx(4e-12, rel=1e-3)

    def test_export_csv(self, tmp_path):
        collector = DiagnosticsCollector(["t", "m"])
        collector.record_step(t=0.0, m=0.1)
        collector.record_step(t=1e-4, m=0.1)
        path = tmp_path / "diagnostics.csv"
        collector.export_csv(path)
        with open(path, newline="") as f:
            rows = list(csv.DictReader(f))
        assert [float(r["t"]) for r in rows] == [0.0, 1e-4]
        assert rows[0]["m"] == repr(0.1)

    def test_export_summary(self, tmp_path):
        collector = DiagnosticsCollector(FULL_CSV_COLUMNS)
        collector.record_step(**row(0.0))
        path = tmp_path / "summary.json"
        collector.export_summary(path, extra={"model": "full"})
        data = json.loads(path.read_text())
        assert data["model"] == "full"
        assert data["rows"] == 1
        assert data["summary"]["steps_recorded"] == 1

    def test_reset(self):
        collector = DiagnosticsCollector(FULL_CSV_COLUMNS)
        collector.record_step(**row(0.0))
        collector.reset()
        assert len(collector.rows) == 0
        assert collector.summary().steps_recorded == 0


class TestWriteTable:
    """Tests for sweep table output."""

    def test_columns_in_order(self, tmp_path):
        path = tmp_path / "sweep.csv"
        write_table(path, ["delta", "error_L2", "u_final"],
                    [{"delta": 0.1, "error_L2": 0.02, "u_final": 0.618}])
        lines = path.read_text().splitlines()
        assert lines[0] == "delta,error_L2,u_final"
        assert lines[1] == "0.1,0.02,0.618"


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
