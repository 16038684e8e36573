"""
Tests for the raftsim Command Line
"""

import json

import pytest

import app
from app import EXIT_CONFIG, EXIT_NUMERICAL, EXIT_OK, build_parser, main
from snapshot import write_snapshot
from spectral_core import SurfaceField, TorusGeometry
from utils.exceptions import NonConvergenceException, NumericalFailureException

SMALL = {
    "geometry": {"N": 16, "Mz": 4},
    "params": {"eps": 0.1, "dt": 1e-4, "t_end": 1e-3},
    "output": {"csv_every": 5, "snapshot_every": 5},
}


@pytest.fixture
def config_file(tmp_path):
    path = tmp_path / "small.json"
    path.write_text(json.dumps(SMALL))
    return path


class TestParser:
    """Test argument parsing."""

    def test_subcommand_required(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args([])

    def test_lists(self):
        args = build_parser().parse_args(["refine", "--N-list", "16,24,32", "--dt-list", "1e-3,5e-4"])
        assert args.N_list == [16, 24, 32]
        assert args.dt_list == [1e-3, 5e-4]

    def test_seed_range(self):
        with pytest.raises(SystemExit):
            build_parser().parse_args(["run", "--seed", str(2 ** 64)])


class TestMain:
    """Test exit codes and outputs of the CLI."""

    def test_run(self, config_file, tmp_path):
        out = tmp_path / "out"
        assert main(["run", "--config", str(config_file), "--out", str(out)]) == EXIT_OK
        assert (out / "diagnostics.csv").exists()
        assert json.loads((out / "config.json").read_text())["output"]["out_dir"] == str(out)

    def test_invalid_config(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"geometry": {"N": 15}}))
        assert main(["run", "--config", str(path), "--out", str(tmp_path / "out")]) == EXIT_CONFIG

    def test_missing_config(self, tmp_path):
        assert main(["run", "--config", str(tmp_path / "absent.json")]) == EXIT_CONFIG

    def test_numerical_failure(self, config_file, tmp_path, monkeypatch):
        def fail(*args, **kwargs):
            raise NumericalFailureException("non-finite phi at step 7", step=7)

        monkeypatch.setattr(app, "run", fail)
        assert main(["run", "--config", str(config_file), "--out", str(tmp_path / "out")]) == EXIT_NUMERICAL

    def test_non_convergence(self, config_file, tmp_path, monkeypatch):
        def stall(*args, **kwargs):
            raise NonConvergenceException("fixed_point_iterate", 10, 1e-3)

        monkeypatch.setattr(app, "run_stationary", stall)
        code = main(["stationary", "--config", str(config_file), "--out", str(tmp_path / "out")])
        assert code == EXIT_NUMERICAL

    def test_sweep_needs_three_values(self, config_file, tmp_path):
        code = main(["sweep-D", "--config", str(config_file), "--out", str(tmp_path / "out"),
                     "--D-list", "1,2"])
        assert code == EXIT_CONFIG

    def test_sweep_delta(self, config_file, tmp_path):
        out = tmp_path / "out"
        code = main(["sweep-delta", "--config", str(config_file), "--out", str(out),
                     "--deltas", "0.2,0.1", "--t-end", "5e-4"])
        assert code == EXIT_OK
        assert (out / "sweep_delta.csv").exists()

    def test_stationary(self, config_file, tmp_path, capsys):
        out = tmp_path / "out"
        code = main(["stationary", "--config", str(config_file), "--out", str(out),
                     "--m", "-0.4", "--M", "1.0", "--eps", "1.0", "--law", "noneq"])
        assert code == EXIT_OK
        assert (out / "stationary_phi.raft").exists()
        assert "res_mass" in capsys.readouterr().out

    def test_stationary_dumps_resolved_config(self, config_file, tmp_path, monkeypatch):
        def stall(*args, **kwargs):
            raise NonConvergenceException("fixed_point_iterate", 10, 1e-3)

        monkeypatch.setattr(app, "run_stationary", stall)
        out = tmp_path / "out"
        main(["stationary", "--config", str(config_file), "--out", str(out),
              "--m", "-0.3", "--eps", "0.5", "--law", "equilibrium"])
        dumped = json.loads((out / "config.json").read_text())
        assert dumped["model"] == "stationary"
        assert dumped["initial"]["phi_mean"] == -0.3
        assert dumped["params"]["eps"] == 0.5
        assert dumped["exchange"]["kind"] == "equilibrium"

    def test_snapshot_grid_mismatch(self, tmp_path):
        snap = write_snapshot(SurfaceField.zeros(TorusGeometry(L=1.0, N=8)), tmp_path / "phi.raft")
        path = tmp_path / "snap.json"
        path.write_text(json.dumps(dict(SMALL, initial={"snapshot": str(snap)})))
        assert main(["run", "--config", str(path), "--out", str(tmp_path / "out")]) == EXIT_CONFIG

    def test_corrupt_snapshot(self, tmp_path):
        snap = tmp_path / "phi.raft"
        snap.write_bytes(b"NOTRAFT")
        path = tmp_path / "snap.json"
        path.write_text(json.dumps(dict(SMALL, initial={"snapshot": str(snap)})))
        assert main(["run", "--config", str(path), "--out", str(tmp_path / "out")]) == EXIT_CONFIG


if __name__ == "__main__":
    pytest.main([__file__, "-v"])
