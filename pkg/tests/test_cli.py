import json
import math

import numpy as np
import pytest

from qbattery.cli import ConfigError, RunConfig, main, parse_theta
from qbattery.observables import SimulationRecord


def run_cli(args):
    return main([str(a) for a in args])


class TestThetaParsing:
    def test_plain_number(self):
        assert parse_theta(0.5) == 0.5
        assert parse_theta("0.5") == 0.5

    def test_pi_multiples(self):
        assert parse_theta("0.01pi") == pytest.approx(0.01 * math.pi, rel=1e-15)
        assert parse_theta("2pi") == pytest.approx(2 * math.pi, rel=1e-15)

    def test_rejects_garbage(self):
        for bad in ("pie", "abc", "-0.1", "0", "nan"):
            with pytest.raises(ConfigError):
                parse_theta(bad)


class TestRunConfig:
    def test_unknown_keys_rejected(self):
        with pytest.raises(ConfigError, match="unknown config keys"):
            RunConfig.from_mapping({"battery": {}, "qubits": {}})
        with pytest.raises(ConfigError, match="unknown battery keys"):
            RunConfig.from_mapping({"battery": {"kind": "oscillator", "levels": 9}})
        with pytest.raises(ConfigError, match="unknown schedule keys"):
            RunConfig.from_mapping({"schedule": {"policy": "fixed", "dt": 1}})

    def test_round_trip_echo(self):
        cfg = RunConfig.from_mapping(
            {
                "battery": {"kind": "spin", "j": 4.5},
                "qubit": {"q": 0.0, "c": 0.0},
                "schedule": {"policy": "fullswap", "steps": 9},
            }
        )
        echo = cfg.echo()
        assert echo["battery"]["kind"] == "spin"
        assert echo["schedule"]["policy"] == "fullswap"

    def test_deterministic_flag_must_stay_true(self):
        with pytest.raises(ConfigError):
            RunConfig.from_mapping({"deterministic": False})


class TestSimulateCommand:
    def test_writes_record_and_sidecar(self, tmp_path):
        out = tmp_path / "run.csv"
        code = run_cli(
            ["simulate", "--battery", "oscillator", "--dim", 40, "--q", "0.5", "--c", "1",
             "--policy", "fixed", "--theta", "0.05pi", "--steps", 30, "--out", out]
        )
        assert code == 0
        lines = out.read_text().splitlines()
        assert lines[0] == ",".join(SimulationRecord.COLUMNS)
        assert len(lines) == 32
        meta = json.loads((tmp_path / "run.meta.json").read_text())
        assert meta["derived"]["swap_rate_constant"] == pytest.approx(0.724611353777)
        assert meta["config"]["schedule"]["policy"] == "fixed"

    def test_byte_identical_reruns(self, tmp_path):
        args = ["simulate", "--battery", "oscillator", "--dim", 30, "--policy", "fixed",
                "--theta", "0.1pi", "--steps", 20, "--q", "0.3", "--c", "0.5", "--alpha", "1.0",
                "--gamma", "1e-3"]
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert run_cli(args + ["--out", a]) == 0
        assert run_cli(args + ["--out", b]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_config_file_with_flag_override(self, tmp_path):
        config = tmp_path / "cfg.json"
        config.write_text(
            json.dumps(
                {
                    "battery": {"kind": "oscillator", "dim": 25},
                    "qubit": {"q": 0.0, "c": 0.0},
                    "schedule": {"policy": "fixed", "theta": "0.2pi", "steps": 10},
                }
            )
        )
        out = tmp_path / "run.csv"
        assert run_cli(["simulate", "--config", config, "--steps", 5, "--out", out]) == 0
        assert len(out.read_text().splitlines()) == 7

    def test_json_format(self, tmp_path):
        out = tmp_path / "run.json"
        assert run_cli(
            ["simulate", "--battery", "uniform", "--dim", 12, "--q", "0", "--c", "0",
             "--policy", "fixed", "--theta", "0.4", "--steps", 6, "--out", out,
             "--format", "json"]
        ) == 0
        payload = json.loads(out.read_text())
        assert payload["columns"] == list(SimulationRecord.COLUMNS)
        assert len(payload["rows"]) == 7

    def test_distributions_output(self, tmp_path):
        out = tmp_path / "run.csv"
        assert run_cli(
            ["simulate", "--battery", "oscillator", "--dim", 10, "--q", "0", "--c", "0",
             "--policy", "fullswap", "--steps", 4, "--out", out, "--distributions"]
        ) == 0
        dist = (tmp_path / "run.distributions.csv").read_text().splitlines()
        assert dist[0] == "omega_tau,level,population"
        assert len(dist) == 1 + 5 * 10

    def test_config_errors_exit_2(self, tmp_path):
        out = tmp_path / "x.csv"
        assert run_cli(["simulate", "--battery", "spin", "--policy", "fixed",
                        "--theta", "0.1", "--steps", 3, "--out", out]) == 2
        assert run_cli(["simulate", "--battery", "oscillator", "--dim", 20,
                        "--policy", "fixed", "--steps", 3, "--out", out]) == 2
        assert run_cli(["simulate", "--battery", "oscillator", "--dim", 20, "--q", "0.5",
                        "--c", "1", "--policy", "fullswap", "--steps", 3, "--out", out]) == 2
        assert run_cli(["simulate", "--config", tmp_path / "missing.json", "--out", out]) == 2

    def test_greedy_policy(self, tmp_path):
        out = tmp_path / "greedy.csv"
        assert run_cli(
            ["simulate", "--battery", "oscillator", "--dim", 60, "--q", "0", "--c", "0",
             "--policy", "greedy-cum", "--horizon", 5, "--out", out]
        ) == 0
        rows = out.read_text().splitlines()
        assert float(rows[-1].split(",")[1]) >= 5.0 - 1.5


class TestBoundCommand:
    def test_oscillator_grid(self, tmp_path):
        out = tmp_path / "bound.csv"
        assert run_cli(["bound", "--kind", "oscillator", "--tau-max", 10, "--points", 11,
                        "--out", out]) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "omega_tau,energy_bound"
        assert len(lines) == 12
        assert float(lines[1].split(",")[1]) == 0.0

    def test_spin_grid_requires_j(self, tmp_path):
        out = tmp_path / "bound.csv"
        assert run_cli(["bound", "--kind", "spin", "--out", out]) == 2
        assert run_cli(["bound", "--kind", "spin", "--spin-j", 49.5, "--tau-max", 6,
                        "--points", 13, "--out", out]) == 0
        last = out.read_text().splitlines()[-1].split(",")
        assert float(last[1]) == pytest.approx(99.0)

    def test_lossy_grid(self, tmp_path):
        out = tmp_path / "lossy.csv"
        assert run_cli(["bound", "--kind", "lossy", "--gamma", 1e-3, "--tau-max", 20,
                        "--points", 5, "--out", out]) == 0
        assert len(out.read_text().splitlines()) == 6


class TestSweepOnsetCommand:
    def test_rows_sorted_and_marked(self, tmp_path):
        out = tmp_path / "onsets.csv"
        assert run_cli(
            ["sweep-onset", "--theta", "0.02pi,0.01pi", "--gamma", "1e-3,0",
             "--dim", 120, "--horizon", 12, "--out", out]
        ) == 0
        lines = out.read_text().splitlines()
        assert lines[0] == "gamma,theta,tau_ad"
        gammas = [float(r.split(",")[0]) for r in lines[1:]]
        thetas = [float(r.split(",")[1]) for r in lines[1:]]
        assert gammas == sorted(gammas)
        assert thetas[:2] == sorted(thetas[:2])

    def test_no_crossing_writes_none(self, tmp_path):
        out = tmp_path / "onsets.csv"
        assert run_cli(
            ["sweep-onset", "--theta", "0.05pi", "--gamma", "0.2", "--dim", 40,
             "--horizon", 5, "--out", out]
        ) == 0
        assert out.read_text().splitlines()[1].endswith(",none")

    def test_empty_grid_rejected(self, tmp_path):
        assert run_cli(["sweep-onset", "--theta", ",", "--gamma", "0",
                        "--out", tmp_path / "x.csv"]) == 2


class TestReproduceCommand:
    def test_fig6_outputs(self, tmp_path):
        outdir = tmp_path / "fig6"
        assert run_cli(["reproduce", "fig6", "--out", outdir]) == 0
        manifest = json.loads((outdir / "manifest.json").read_text())
        for name in manifest["files"]:
            assert (outdir / name).exists()
        assert "coherent_0.01pi_damped.csv" in manifest["files"]
        assert "lossy_bound.csv" in manifest["files"]
        curve = np.loadtxt(outdir / "coherent_0.01pi_damped.csv", delimiter=",", skiprows=1)
        bound = np.loadtxt(outdir / "lossy_bound.csv", delimiter=",", skiprows=1)
        assert curve.shape[1] == 8
        assert bound.shape[1] == 2

    def test_fig2_snapshots(self, tmp_path):
        outdir = tmp_path / "fig2"
        assert run_cli(["reproduce", "fig2", "--out", outdir]) == 0
        dist = np.loadtxt(outdir / "coherent_0.01pi.distributions.csv", delimiter=",", skiprows=1)
        taus = np.unique(dist[:, 0])
        assert taus.size == 4        # the four snapshot times
        for tau in taus:
            block = dist[dist[:, 0] == tau]
            assert block[:, 2].sum() == pytest.approx(1.0, abs=1e-9)

    def test_unknown_figure_rejected(self, tmp_path):
        with pytest.raises(SystemExit) as err:
            run_cli(["reproduce", "fig9", "--out", tmp_path])
        assert err.value.code == 2

    def test_presets_parse(self):
        from qbattery.cli import _load_preset

        for figure in ("fig2", "fig3", "fig4", "fig5", "fig6"):
            preset = _load_preset(figure)
            assert "battery" in preset and "horizon" in preset
