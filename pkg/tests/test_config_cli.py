import csv
import math

import numpy as np
import pytest

from blobsim.cli import main
from blobsim.config import RunConfig, apply_overrides, dump_config, load_config
from blobsim.presets import preset, resolve

SPHERE_TEXT = """
[run]
experiment = sphere
n = 800
seed = 3
snapshot_every = 5

[params]
total_time = 0.5
cutoff = 5.0
"""

CUSTOM_TEXT = """
[run]
experiment = custom
n = 500
seed = 1

[params]
total_time = 0.2
mass_per_particle = 2.0
diffusivity = 1.0

[domain]
shape = cylinder
base = 0, 0, 0
axis = 1, 0, 0
length = 2.0
radius = 0.5
outlet_radius = 0.25

[bc]
patch_0 = neumann 5000
patch_1 = neumann -20000
"""


class TestConfigFile:
    def test_parse_fields(self):
        cfg = load_config(SPHERE_TEXT)
        assert cfg.experiment == "sphere"
        assert cfg.n == 800 and cfg.seed == 3
        assert cfg.snapshot_every == 5
        assert cfg.total_time == 0.5
        assert cfg.cutoff == 5.0
        assert cfg.beta is None  # derived later

    def test_unknown_key_rejected(self):
        with pytest.raises(ValueError, match="unknown key"):
            load_config("[run]\nexperiment = sphere\nwidth = 3\n")

    def test_unknown_section_rejected(self):
        with pytest.raises(ValueError, match="unknown config section"):
            load_config("[solver]\ntol = 1e-6\n")

    def test_custom_domain_and_bcs(self):
        cfg = load_config(CUSTOM_TEXT)
        assert cfg.domain["shape"] == "cylinder"
        assert cfg.domain["axis"] == (1.0, 0.0, 0.0)
        assert cfg.bcs == {0: ("neumann", 5000.0), 1: ("neumann", -20000.0)}
        plan = resolve(cfg)
        assert len(plan.patches) == 4
        assert plan.params.mass_per_particle == 2.0

    def test_bad_bc_line_rejected(self):
        with pytest.raises(ValueError, match="bc"):
            load_config("[bc]\npatch_0 = robin 1.0\n")

    def test_custom_requires_mass(self):
        cfg = load_config(CUSTOM_TEXT.replace("mass_per_particle = 2.0\n", ""))
        with pytest.raises(ValueError, match="mass_per_particle"):
            resolve(cfg)

    def test_overrides_beat_file_values(self):
        cfg = load_config(SPHERE_TEXT)
        apply_overrides(cfg, n=1600, seed=None)
        assert cfg.n == 1600
        assert cfg.seed == 3  # None leaves the file value alone
        with pytest.raises(ValueError, match="unknown config field"):
            apply_overrides(cfg, granularity=2)

    def test_dump_round_trip(self):
        cfg = load_config(CUSTOM_TEXT)
        text = dump_config(cfg)
        back = load_config(text)
        assert back.experiment == cfg.experiment
        assert back.bcs == cfg.bcs
        assert back.domain["length"] == cfg.domain["length"]
        assert back.mass_per_particle == cfg.mass_per_particle

    def test_output_dir_env_default(self, monkeypatch):
        monkeypatch.setenv("BLOBSIM_OUTDIR", "/tmp/blobsim-test")
        cfg = RunConfig(experiment="sphere", n=100)
        assert cfg.output_dir() == "/tmp/blobsim-test/sphere_100"
        cfg.out = "explicit"
        assert cfg.output_dir() == "explicit"


class TestPresets:
    def test_sphere_boundary_density(self):
        plan = resolve(preset("sphere"))
        assert plan.bcs[0].value == pytest.approx(0.238732, abs=5e-7)
        assert plan.info["mass_steady"] == 1.0

    def test_box_steady_mass(self):
        plan = resolve(preset("box"))
        assert plan.info["mass_steady"] == pytest.approx(1000.0)
        assert plan.bcs[0].value == pytest.approx(500.0)
        assert plan.bcs[0].patch.surface.axis == 0  # the square end face

    def test_pipe_fluxes(self):
        plan = resolve(preset("pipe"))
        assert plan.info["flux_out"] == pytest.approx(20000.0)
        assert plan.bcs[0].value == pytest.approx(5000.0)
        assert plan.bcs[1].value == pytest.approx(-20000.0)
        assert plan.config.initial_fill == "uniform"

    def test_unknown_preset(self):
        with pytest.raises(ValueError):
            preset("torus")

    def test_sphere_and_box_start_empty(self):
        assert resolve(preset("sphere")).config.initial_fill == "none"
        assert resolve(preset("box")).config.initial_fill == "none"


class TestCli:
    def test_preset_show(self, capsys):
        assert main(["preset", "--show", "--experiment", "sphere", "--n", "1600"]) == 0
        out = capsys.readouterr().out
        assert "experiment = sphere" in out
        assert "beta = 273.596" in out
        assert "layer_depth = 0.292" in out

    def test_preset_summary(self, capsys):
        main(["preset", "--experiment", "pipe"])
        out = capsys.readouterr().out
        assert "dt=0.0052" in out

    def test_run_with_config_and_flags(self, tmp_path, capsys):
        cfg_path = tmp_path / "run.cfg"
        cfg_path.write_text(SPHERE_TEXT)
        out_dir = tmp_path / "out"
        code = main(["run", "--config", str(cfg_path), "--n", "200",
                     "--total-time", "0.2", "--out", str(out_dir)])
        assert code == 0
        assert (out_dir / "timeseries.csv").exists()
        assert (out_dir / "run_manifest.txt").exists()
        assert (out_dir / "corrector_log.csv").exists()
        assert (out_dir / "snapshot_0.csv").exists()
        assert "n=200" in capsys.readouterr().out

    def test_fit_subcommand(self, tmp_path, capsys):
        path = tmp_path / "summary.csv"
        m = np.array([1.0, 0.5, 0.25, 0.125, 0.0625])
        q = 4.0 + 2.0 * m**0.5
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["n", "m_p", "l1_mass"])
            for n_, (mi, qi) in enumerate(zip(m, q)):
                w.writerow([n_, repr(float(mi)), repr(float(qi))])
        code = main(["fit", "--input", str(path)])
        assert code == 0
        out = capsys.readouterr().out
        assert "l1_mass" in out and "alpha=0.5000" in out
        report = tmp_path / "fit_report.csv"
        main(["fit", "--input", str(path), "--out", str(report)])
        with open(report, newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert float(rows[0]["alpha"]) == pytest.approx(0.5, abs=1e-6)

    def test_requires_experiment_or_config(self):
        with pytest.raises(SystemExit):
            main(["run"])

    def test_rejects_unknown_experiment(self):
        with pytest.raises(SystemExit):
            main(["run", "--experiment", "torus"])
