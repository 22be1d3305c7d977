"""Experiment driver: config validation, preset catalog, output contracts,
manifest completeness, and determinism."""

import json
import re

import numpy as np
import pytest

from drivenosc.cli import ExperimentConfig, main, run
from drivenosc.errors import ConfigError
from drivenosc.presets import PRESETS, list_presets, preset_config

TINY_EVOLVE = {
    "experiment": "evolve",
    "params": {"h": 0.2, "epsilon": 0.02, "resonance_number": 2, "detuning": 0.0},
    "settings": {"m0": 5, "basis_size": 30, "tau_to": 4.0, "snapshots": 2},
}


class TestPresetCatalog:
    def test_eleven_presets(self):
        assert len(list_presets()) == 11
        assert set(PRESETS) == {
            "fig2", "fig3", "fig4a", "fig4b", "fig5a", "fig5b", "fig6",
            "fig7a", "fig7b", "fig8a", "fig8b",
        }

    def test_detuned_chain_preset(self):
        cfg = preset_config("fig4b")
        assert cfg["params"]["detuning"] == 0.001
        assert cfg["experiment"] == "chain-spectrum"

    def test_weak_section_preset(self):
        cfg = preset_config("fig5a")
        assert cfg["params"] == {
            "h": 0.2, "epsilon": 0.02, "resonance_number": 2, "detuning": 0.0,
        }
        assert cfg["experiment"] == "classical-section"

    def test_transport_windows(self):
        a = preset_config("fig7a")["settings"]
        b = preset_config("fig7b")["settings"]
        assert (a["tau_start"], a["tau_end"], a["samples"]) == (5000.0, 105000.0, 100)
        assert (b["tau_start"], b["tau_end"], b["samples"]) == (500.0, 10500.0, 100)
        assert preset_config("fig7b")["params"]["epsilon"] == 3.0
        assert a["m0"] == b["m0"] == 30

    def test_unknown_preset(self):
        with pytest.raises(KeyError):
            preset_config("fig9")


class TestConfigValidation:
    def test_round_trip(self, tmp_path):
        cfg = ExperimentConfig.from_dict(dict(TINY_EVOLVE), output_dir=tmp_path)
        assert cfg.experiment == "evolve"
        assert cfg.settings["snapshots"] == 2
        assert cfg.settings["tolerance"] == 1e-10  # default filled in

    @pytest.mark.parametrize(
        "mutate",
        [
            lambda d: d.update(bogus=1),
            lambda d: d["params"].update(bogus=1),
            lambda d: d["settings"].update(bogus=1),
            lambda d: d.update(experiment="nope"),
            lambda d: d["params"].pop("h"),
            lambda d: d["settings"].pop("m0"),
            lambda d: d["params"].update(h=-1.0),
            lambda d: d["params"].update(detuning=0.7),
        ],
    )
    def test_rejections(self, mutate):
        raw = json.loads(json.dumps(TINY_EVOLVE))
        mutate(raw)
        with pytest.raises(ConfigError):
            ExperimentConfig.from_dict(raw)


class TestCliEntry:
    def test_no_command_is_usage_error(self, capsys):
        assert main([]) == 2

    def test_list_presets_output(self, capsys):
        assert main(["list-presets"]) == 0
        out = capsys.readouterr().out
        assert out.count("\n") == 11
        assert "fig7b" in out

    def test_bad_config_exit_code(self, tmp_path):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        assert main(["run", "--config", str(bad)]) == 2
        missing = tmp_path / "missing.json"
        assert main(["run", "--config", str(missing)]) == 2

    def test_numerical_guard_exit_code(self, tmp_path):
        cfg = tmp_path / "lattice.json"
        cfg.write_text(json.dumps({
            "experiment": "lattice2d",
            "params": TINY_EVOLVE["params"],
            "settings": {"basis_size": 100, "l_max": 100},
        }))
        assert main(["run", "--config", str(cfg), "--out", str(tmp_path / "o")]) == 3

    def test_gate_exit_code(self, tmp_path):
        # strong drive in a tiny basis trips the tail gate
        cfg = tmp_path / "gate.json"
        cfg.write_text(json.dumps({
            "experiment": "time-average",
            "params": {"h": 0.2, "epsilon": 3.0, "resonance_number": 2},
            "settings": {"m0": 30, "basis_size": 60, "tau_start": 10.0,
                         "tau_end": 200.0, "samples": 5, "tail_gate": 1e-6},
        }))
        with pytest.warns(UserWarning):
            code = main(["run", "--config", str(cfg), "--out", str(tmp_path / "o"),
                         "--no-plot"])
        assert code == 4

    def test_preset_with_overrides(self, tmp_path):
        out = tmp_path / "o"
        code = main([
            "preset", "fig4a", "--out", str(out), "--no-plot",
            "--set", "settings.sites_to_m=300",
            "--set", "settings.analysis_m=150",
        ])
        assert code == 0
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["config"]["settings"]["sites_to_m"] == 300


class TestRunContract:
    def run_tiny(self, tmp_path, name, plot=False):
        cfg = ExperimentConfig.from_dict(
            json.loads(json.dumps(TINY_EVOLVE)), output_dir=tmp_path / name
        )
        return cfg, run(cfg, plot=plot)

    def test_manifest_lists_every_file(self, tmp_path):
        cfg, manifest = self.run_tiny(tmp_path, "a", plot=True)
        listed = {o["file"] for o in manifest.outputs}
        on_disk = {p.name for p in cfg.output_dir.iterdir()}
        assert listed == on_disk
        assert "manifest.json" in listed

    def test_manifest_has_diagnostics(self, tmp_path):
        _, manifest = self.run_tiny(tmp_path, "b")
        assert manifest.version
        assert "norm_drift_max" in manifest.diagnostics
        assert manifest.wall_time_s > 0

    def test_runs_are_byte_identical(self, tmp_path):
        cfg1, _ = self.run_tiny(tmp_path, "c1")
        cfg2, _ = self.run_tiny(tmp_path, "c2")
        b1 = (cfg1.output_dir / "evolution.csv").read_bytes()
        b2 = (cfg2.output_dir / "evolution.csv").read_bytes()
        assert b1 == b2

    def test_csv_numeric_format(self, tmp_path):
        cfg, _ = self.run_tiny(tmp_path, "d")
        lines = (cfg.output_dir / "evolution.csv").read_text().split("\n")
        assert lines[0] == "tau,m,probability"
        cell = lines[1].split(",")[2]
        assert re.fullmatch(r"-?\d\.\d{11}e[+-]\d{2,3}", cell)
        assert "\r" not in (cfg.output_dir / "evolution.csv").read_text()

    def test_cells_experiment(self, tmp_path):
        cfg = ExperimentConfig.from_dict({
            "experiment": "cells",
            "params": TINY_EVOLVE["params"],
            "settings": {"m_ceiling": 600.0},
        }, output_dir=tmp_path / "cells")
        manifest = run(cfg, plot=False)
        rows = (cfg.output_dir / "cells.csv").read_text().strip().split("\n")
        assert rows[0] == "cell,m_boundary,m_boundary_rounded,kr_boundary"
        first = rows[1].split(",")
        assert first[2] == "66"
        assert manifest.diagnostics["cell_count"] == len(rows) - 1

    def test_classical_section_experiment(self, tmp_path):
        cfg = ExperimentConfig.from_dict({
            "experiment": "classical-section",
            "params": TINY_EVOLVE["params"],
            "settings": {"cells": 2, "kr_per_cell": 3, "angles": 2,
                         "periods": 10},
        }, output_dir=tmp_path / "sec")
        run(cfg, plot=False)
        rows = (cfg.output_dir / "section.csv").read_text().strip().split("\n")
        assert rows[0] == "trajectory_id,s,kr,theta"
        assert len(rows) == 1 + 2 * 3 * 2 * 11

    def test_chain_spectrum_figures(self, tmp_path):
        cfg = ExperimentConfig.from_dict({
            "experiment": "chain-spectrum",
            "params": TINY_EVOLVE["params"],
            "settings": {"sites_to_m": 400, "analysis_m": 200.0,
                         "export_vectors": "cell-centers", "vector_cells": [1, 2],
                         "export_coupling": True},
        }, output_dir=tmp_path / "ch")
        manifest = run(cfg, plot=True)
        files = {o["file"] for o in manifest.outputs}
        assert {"chain_states.csv", "chain_states.png", "coupling_elements.csv",
                "vector_cell1.csv", "vector_cell2.csv"} <= files
        probs = np.loadtxt(cfg.output_dir / "vector_cell1.csv",
                           delimiter=",", skiprows=1)
        assert probs[:, 1].sum() == pytest.approx(1.0, abs=1e-9)
