import csv
import hashlib
import json
from pathlib import Path

import numpy as np
import pytest

from multiwell.cli import main
from multiwell.config import load_config, dumps_toml, resolve_config
from multiwell.errors import ConfigurationError

CONFIGS = Path(__file__).resolve().parent.parent / "configs"

SMALL = """
[landscape]
wells = [[0.3, 0.5, 0.3], [0.7, 0.5, 0.3]]
bounds = [-0.5, 1.5, -0.5, 1.5]
filter_width = 0.02
grid_points = 128

[noise]
l = 10.0

[solver]
J = 8
dt = 0.001

[run]
sigma = 0.05
t_end = 2.0
seed = 5
initial_condition = [0.3, 0.5]
burn_in = 0.5
"""


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.toml"
    path.write_text(SMALL)
    return path


def digests(out_dir, names):
    return {n: hashlib.sha256((out_dir / n).read_bytes()).hexdigest()
            for n in names}


class TestConfig:
    def test_missing_wells_names_the_key(self, tmp_path, capsys):
        path = tmp_path / "bad.toml"
        path.write_text("[run]\nsigma = 0.1\n")
        code = main(["run", "--config", str(path)])
        assert code == 2
        assert "landscape.wells" in capsys.readouterr().err

    def test_unknown_key_rejected(self, tmp_path, capsys):
        path = tmp_path / "bad.toml"
        path.write_text(SMALL + "\n[extra]\nfoo = 1\n")
        assert main(["run", "--config", str(path)]) == 2
        assert "extra" in capsys.readouterr().err

    def test_missing_file_is_config_error(self, capsys):
        assert main(["run", "--config", "/nonexistent.toml"]) == 2

    def test_print_config_round_trips(self, small_config, tmp_path, capsys):
        assert main(["run", "--config", str(small_config), "--print-config"]) == 0
        text = capsys.readouterr().out
        assert "bounds" in text and "filter_width" in text
        back = tmp_path / "resolved.toml"
        back.write_text(text)
        resolved = load_config(back)
        assert resolved == load_config(small_config)

    def test_counts_derive_weights(self):
        cfg = resolve_config({
            "landscape": {"wells": [[0.0, 0.0], [1.0, 0.0]],
                          "counts": [4, 1]},
        })
        assert cfg["landscape"]["wells"] == [[0.0, 0.0, 0.25], [1.0, 0.0, 0.5]]

    def test_toml_dump_survives_merge(self, small_config):
        cfg = load_config(small_config)
        again = resolve_config(
            __import__("tomli").loads(dumps_toml(cfg)))
        assert again == cfg


class TestRun:
    def test_outputs_and_determinism(self, small_config, tmp_path):
        names = ["trajectory.csv", "diagnostics.csv", "manifest.json"]
        outs = []
        for sub in ("a", "b"):
            out = tmp_path / sub
            out.mkdir()
            assert main(["run", "--config", str(small_config),
                         "--out", str(out)]) == 0
            outs.append(digests(out, names))
        assert outs[0] == outs[1]
        manifest = json.loads((tmp_path / "a" / "manifest.json").read_text())
        assert manifest["seed"] == 5
        for name in ("trajectory.csv", "diagnostics.csv"):
            assert manifest["outputs"][name] == outs[0][name]

    def test_sigma_zero_stays_in_basin(self, tmp_path):
        out = tmp_path / "out"
        assert main(["run", "--config", str(CONFIGS / "default.toml"),
                     "--sigma", "0", "--t-end", "1", "--out", str(out)]) == 0
        with open(out / "diagnostics.csv") as fh:
            rows = list(csv.DictReader(fh))
        assert rows[-1]["basin"] == rows[0]["basin"]

    def test_rerun_from_manifest_is_byte_identical(self, small_config, tmp_path):
        first = tmp_path / "first"
        first.mkdir()
        assert main(["run", "--config", str(small_config),
                     "--out", str(first)]) == 0
        manifest = json.loads((first / "manifest.json").read_text())
        rebuilt = tmp_path / "from_manifest.toml"
        rebuilt.write_text(dumps_toml(manifest["config"]))
        second = tmp_path / "second"
        second.mkdir()
        assert main(["run", "--config", str(rebuilt), "--seed",
                     str(manifest["seed"]), "--out", str(second)]) == 0
        names = ["trajectory.csv", "diagnostics.csv"]
        assert digests(first, names) == digests(second, names)
        again = json.loads((second / "manifest.json").read_text())
        assert again["outputs"] == manifest["outputs"]

    def test_seed_override_changes_output(self, small_config, tmp_path):
        hashes = []
        for seed in ("5", "6"):
            out = tmp_path / seed
            out.mkdir()
            assert main(["run", "--config", str(small_config), "--seed", seed,
                         "--out", str(out)]) == 0
            hashes.append(digests(out, ["trajectory.csv"]))
        assert hashes[0] != hashes[1]


class TestEnsemble:
    def test_single_trajectory_matches_run(self, small_config, tmp_path):
        run_out = tmp_path / "run"
        ens_out = tmp_path / "ens"
        run_out.mkdir(), ens_out.mkdir()
        assert main(["run", "--config", str(small_config),
                     "--out", str(run_out)]) == 0
        assert main(["ensemble", "--config", str(small_config), "-n", "1",
                     "--out", str(ens_out)]) == 0
        with open(run_out / "diagnostics.csv") as fh:
            rows = list(csv.DictReader(fh))
        pooled = np.array([float(r["avg_u"]) for r in rows
                           if float(r["t"]) > 0.5])
        report = json.loads((ens_out / "transitions.json").read_text())
        assert report["summary"]["mean_u"] == pytest.approx(pooled.mean(), abs=1e-15)
        assert report["summary"]["n_samples"] == len(pooled)

    def test_sequence_counts_sum_to_n(self, small_config, tmp_path):
        out = tmp_path / "out"
        assert main(["ensemble", "--config", str(small_config), "-n", "7",
                     "--out", str(out)]) == 0
        report = json.loads((out / "transitions.json").read_text())
        assert sum(report["sequences"].values()) == 7
        occ = json.loads((out / "occupation.json").read_text())
        assert sum(occ["fractions"]) == pytest.approx(1.0, abs=1e-12)

    def test_sigma_halving_visible_through_cli(self, tmp_path):
        # reduced-size version of the spread-halving observation; the
        # full 200-trajectory run is acceptance criterion 1
        stds = {}
        for sigma in ("0.012", "0.006"):
            out = tmp_path / sigma
            out.mkdir()
            assert main(["ensemble", "--config",
                         str(CONFIGS / "default.toml"), "--sigma", sigma,
                         "--t-end", "30", "-n", "40", "--out", str(out)]) == 0
            report = json.loads((out / "transitions.json").read_text())
            stds[sigma] = report["summary"]["std_u"]
        assert 1.7 < stds["0.012"] / stds["0.006"] < 2.3

    def test_white_noise_mode_through_config(self, tmp_path):
        path = tmp_path / "white.toml"
        path.write_text(SMALL.replace('l = 10.0', 'mode = "white"'))
        out = tmp_path / "out"
        assert main(["run", "--config", str(path), "--out", str(out)]) == 0
        assert (out / "diagnostics.csv").exists()

    def test_jobs_do_not_change_outputs(self, small_config, tmp_path):
        names = ["histogram.csv", "occupation.json", "transitions.json"]
        results = []
        for jobs, sub in (("1", "j1"), ("2", "j2")):
            out = tmp_path / sub
            out.mkdir()
            assert main(["ensemble", "--config", str(small_config), "-n", "6",
                         "--jobs", jobs, "--out", str(out)]) == 0
            results.append(digests(out, names))
        assert results[0] == results[1]


class TestExitStudy:
    def test_empty_sigma_list_is_config_error(self, small_config, tmp_path):
        assert main(["exit-study", "--config", str(small_config),
                     "--out", str(tmp_path)]) == 2

    def test_report_fields_present(self, small_config, tmp_path):
        out = tmp_path / "out"
        assert main(["exit-study", "--config", str(small_config),
                     "--sigmas", "0.16,0.13,0.11", "--n-per-sigma", "20",
                     "--t-end", "400", "--out", str(out)]) == 0
        report = json.loads((out / "exit_study.json").read_text())
        for key in ("sigmas", "mean_exit", "censoring", "fitted_slope",
                    "predicted_slope", "saddle_point", "unreliable"):
            assert key in report
        assert len(report["mean_exit"]) == 3

    def test_censoring_flagged_not_fatal(self, small_config, tmp_path):
        # sigma too small to exit within t_end: flagged, exit code still 0
        out = tmp_path / "out"
        assert main(["exit-study", "--config", str(small_config),
                     "--sigmas", "0.02,0.018,0.016", "--n-per-sigma", "20",
                     "--t-end", "5", "--out", str(out)]) == 0
        report = json.loads((out / "exit_study.json").read_text())
        assert report["unreliable"] is True
        assert max(report["censoring"]) > 0.1


class TestLandscapeCmd:
    def test_limit_measure_and_barrier_table(self, tmp_path):
        path = tmp_path / "quad.toml"
        path.write_text("""
[landscape]
wells = [[0.25, 0.25, 1.0], [0.75, 0.25, 1.0], [0.75, 0.75, 2.0], [0.25, 0.75, 2.0]]
bounds = [-0.5, 1.5, -0.5, 1.5]
filter_width = 0.015
grid_points = 161
[solver]
J = 8
""")
        out = tmp_path / "out"
        assert main(["landscape", "--config", str(path),
                     "--out", str(out)]) == 0
        report = json.loads((out / "limit_measure.json").read_text())
        assert report["limit_weights"] == pytest.approx([0.4, 0.4, 0.1, 0.1])
        assert report["hessian_dets"] == pytest.approx([4.0, 4.0, 16.0, 16.0])
        pair = {(b["from"], b["to"]): b["barrier"] for b in report["barriers"]}
        assert pair[(0, 1)] == pytest.approx(pair[(1, 0)], abs=1e-9)
        header = (out / "landscape.csv").read_text().splitlines()[0]
        assert header == "u,v,F,dFdu,dFdv"
