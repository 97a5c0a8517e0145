import json

import numpy as np
import pandas as pd
import pytest
from click.testing import CliRunner

from bandpick.datacube import load_cube, save_patch_set
from bandpick.reports import read_ibra_csv, read_table_csv
from bandpick.synthetic import BLOCKS_CANDIDATES

from conftest import make_patch_set
from main import cli


@pytest.fixture(scope="module")
def runner():
    return CliRunner()


@pytest.fixture(scope="module")
def planted_dir(tmp_path_factory, runner):
    directory = tmp_path_factory.mktemp("planted")
    result = runner.invoke(cli, ["gen-synthetic", "--kind", "planted", "--per-class", "100", "--out", str(directory)])
    assert result.exit_code == 0, result.output
    return directory


@pytest.fixture(scope="module")
def gss_dir(tmp_path_factory, runner, planted_dir):
    out = tmp_path_factory.mktemp("gss")
    result = runner.invoke(cli, ["gss", "--input", str(planted_dir), "--k", "2", "--out", str(out)])
    assert result.exit_code == 0, result.output
    return out


def theta_lines(result):
    return [line for line in result.stdout.splitlines() if line.startswith("θ=")]


class TestGenSynthetic:

    def test_patch_directory(self, planted_dir):
        labels = pd.read_csv(planted_dir / "labels.csv")
        assert len(labels) == 300
        assert load_cube(planted_dir / "patch_00000.hsc").data.shape == (5, 5, 12)

    def test_as_cube(self, runner, tmp_path):
        result = runner.invoke(cli, ["gen-synthetic", "--per-class", "20", "--as-cube", "--out", str(tmp_path)])
        assert result.exit_code == 0, result.output
        cube = load_cube(tmp_path / "cube.hsc")
        label_map = pd.read_csv(tmp_path / "labels_map.csv", header=None).to_numpy()
        assert label_map.shape == (cube.height, cube.width)
        assert (label_map >= 0).sum() == 60

    def test_missing_out(self, runner):
        assert runner.invoke(cli, ["gen-synthetic"]).exit_code == 2


class TestIbraCommand:

    def test_blocks_dataset(self, runner, tmp_path):
        data = tmp_path / "blocks"
        runner.invoke(cli, ["gen-synthetic", "--kind", "blocks", "--per-class", "50", "--out", str(data)])
        out = tmp_path / "out"
        result = runner.invoke(cli, ["ibra", "--input", str(data), "--theta", "10", "--out", str(out)])
        assert result.exit_code == 0, result.output

        frame = read_ibra_csv(out / "ibra_theta_10.csv")
        assert frame.loc[frame["is_candidate"], "band_index"].tolist() == list(BLOCKS_CANDIDATES)
        assert (out / "ibra_theta_10.svg").read_text().count('class="candidate"') == 5
        assert theta_lines(result) == [f"θ=10: 5 candidates {list(BLOCKS_CANDIDATES)}"]

    def test_theta_range(self, runner, planted_dir, tmp_path):
        result = runner.invoke(cli, ["ibra", "--input", str(planted_dir), "--theta-range", "8:10", "--out", str(tmp_path)])
        assert result.exit_code == 0, result.output
        assert sorted(p.name for p in tmp_path.glob("*.csv")) == [
            "ibra_theta_10.csv", "ibra_theta_8.csv", "ibra_theta_9.csv",
        ]

    def test_cube_input(self, runner, tmp_path):
        runner.invoke(cli, ["gen-synthetic", "--per-class", "20", "--as-cube", "--out", str(tmp_path)])
        result = runner.invoke(cli, [
            "ibra", "--input", str(tmp_path / "cube.hsc"), "--labels", str(tmp_path / "labels_map.csv"),
            "--out", str(tmp_path / "out"),
        ])
        assert result.exit_code == 0, result.output
        assert theta_lines(result) == ["θ=10: 3 candidates [3, 6, 9]"]

    @pytest.mark.parametrize("args", [
        ["--theta", "10", "--theta-range", "5:12"],
        ["--theta", "0.5"],
        ["--theta-range", "12:5"],
        ["--patch-size", "4"],
    ])
    def test_usage_errors(self, runner, planted_dir, tmp_path, args):
        result = runner.invoke(cli, ["ibra", "--input", str(planted_dir), "--out", str(tmp_path), *args])
        assert result.exit_code == 2

    def test_missing_input(self, runner, tmp_path):
        result = runner.invoke(cli, ["ibra", "--input", str(tmp_path / "absent.hsc"), "--out", str(tmp_path)])
        assert result.exit_code == 2

    def test_cube_without_labels(self, runner, tmp_path):
        runner.invoke(cli, ["gen-synthetic", "--per-class", "5", "--as-cube", "--out", str(tmp_path)])
        result = runner.invoke(cli, ["ibra", "--input", str(tmp_path / "cube.hsc"), "--out", str(tmp_path)])
        assert result.exit_code == 2

    def test_corrupt_cube(self, runner, tmp_path):
        (tmp_path / "bad.hsc").write_bytes(b"NOPE" + bytes(40))
        (tmp_path / "labels.csv").write_text("0,1\n1,0\n")
        result = runner.invoke(cli, [
            "ibra", "--input", str(tmp_path / "bad.hsc"), "--labels", str(tmp_path / "labels.csv"),
            "--out", str(tmp_path / "out"),
        ])
        assert result.exit_code == 1
        assert not (tmp_path / "out").exists()


class TestGssCommand:

    def test_planted_selection(self, gss_dir):
        payload = json.loads((gss_dir / "selection.json").read_text())
        assert sorted(payload["selected_bands"]) == [3, 9]
        assert payload["candidates"] == [3, 6, 9]
        assert payload["k"] == 2 and payload["theta"] == 10.0
        assert (gss_dir / "ranking_theta_10.csv").exists()
        assert (gss_dir / "ibra_theta_10.csv").exists()

    def test_reruns_are_byte_identical(self, runner, planted_dir, gss_dir, tmp_path):
        result = runner.invoke(cli, ["gss", "--input", str(planted_dir), "--k", "2", "--out", str(tmp_path)])
        assert result.exit_code == 0, result.output
        for name in ("selection.json", "selection_table.csv", "ibra_theta_10.csv", "ranking_theta_10.csv"):
            assert (tmp_path / name).read_bytes() == (gss_dir / name).read_bytes()

    def test_backend_flags_exclusive(self, runner, planted_dir, tmp_path):
        result = runner.invoke(cli, [
            "gss", "--input", str(planted_dir), "--backend", "true", "--backend-url", "http://x",
            "--out", str(tmp_path),
        ])
        assert result.exit_code == 2

    def test_no_candidates(self, runner, tmp_path):
        # bandes indépendantes : d nul partout, aucun minimum local
        rng = np.random.default_rng(0)
        save_patch_set(make_patch_set(rng.normal(size=(40, 3, 3, 6)), np.repeat([0, 1], 20)), tmp_path / "data")
        result = runner.invoke(cli, ["gss", "--input", str(tmp_path / "data"), "--out", str(tmp_path / "out")])
        assert result.exit_code == 1
        assert not (tmp_path / "out").exists()


@pytest.mark.slow
class TestSweepCommand:

    def test_planted_sweep(self, runner, planted_dir, tmp_path):
        result = runner.invoke(cli, ["sweep", "--input", str(planted_dir), "--k", "2", "--out", str(tmp_path)])
        assert result.exit_code == 0, result.output
        assert len(theta_lines(result)) == 8
        assert "🏆 Gagnant" in result.stdout

        table = read_table_csv(tmp_path / "selection_table.csv")
        assert sorted(table["theta"]) == [5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0]
        assert table["f1"].is_monotonic_decreasing
        assert len(json.loads((tmp_path / "sweep.json").read_text())) == 8


class TestEvaluateCommand:

    def test_full_spectrum_and_candidates(self, runner, planted_dir, tmp_path):
        result = runner.invoke(cli, ["evaluate", "--input", str(planted_dir), "--out", str(tmp_path)])
        assert result.exit_code == 0, result.output
        frame = pd.read_csv(tmp_path / "evaluation.csv")
        assert frame["configuration"].tolist() == ["full_spectrum", "ibra_theta_10"]
        evaluation = json.loads((tmp_path / "evaluation.json").read_text())
        assert evaluation["ibra_theta_10"]["bands"] == [3, 6, 9]
        assert len(evaluation["full_spectrum"]["bands"]) == 12

    def test_explicit_bands(self, runner, planted_dir, tmp_path):
        result = runner.invoke(cli, ["evaluate", "--input", str(planted_dir), "--bands", "3,9", "--out", str(tmp_path)])
        assert result.exit_code == 0, result.output
        assert result.stdout.startswith("bands: ")

    def test_invalid_bands(self, runner, planted_dir, tmp_path):
        result = runner.invoke(cli, ["evaluate", "--input", str(planted_dir), "--bands", "3,x", "--out", str(tmp_path)])
        assert result.exit_code == 2


class TestSimulateCommand:

    def test_missing_report(self, runner, planted_dir, tmp_path):
        result = runner.invoke(cli, [
            "simulate", "--input", str(planted_dir), "--report", str(tmp_path / "absent.json"),
            "--out", str(tmp_path),
        ])
        assert result.exit_code == 2

    def test_delta_filters_match_raw_bands(self, runner, planted_dir, gss_dir, tmp_path):
        result = runner.invoke(cli, [
            "simulate", "--input", str(planted_dir), "--report", str(gss_dir / "selection.json"),
            "--fwhm-bands", "1e-6", "--out", str(tmp_path),
        ])
        assert result.exit_code == 0, result.output
        frame = pd.read_csv(tmp_path / "simulation_metrics.csv").set_index("configuration")
        for column in ("oa", "prec", "rec", "f1"):
            assert frame.loc["simulated", column] == frame.loc["raw", column]
        assert (tmp_path / "filter_bank.csv").exists()
        assert (tmp_path / "simulated" / "labels.csv").exists()

    def test_default_filters(self, runner, planted_dir, gss_dir, tmp_path):
        result = runner.invoke(cli, [
            "simulate", "--input", str(planted_dir), "--report", str(gss_dir / "selection.json"),
            "--fwhm-nm", "20", "--out", str(tmp_path),
        ])
        assert result.exit_code == 0, result.output
        frame = pd.read_csv(tmp_path / "simulation_metrics.csv").set_index("configuration")
        assert abs(frame.loc["simulated", "f1"] - frame.loc["raw", "f1"]) <= 0.03

    def test_band_count_mismatch(self, runner, gss_dir, tmp_path):
        data = tmp_path / "blocks"
        runner.invoke(cli, ["gen-synthetic", "--kind", "blocks", "--per-class", "10", "--out", str(data)])
        result = runner.invoke(cli, [
            "simulate", "--input", str(data), "--report", str(gss_dir / "selection.json"),
            "--out", str(tmp_path / "out"),
        ])
        assert result.exit_code == 2

    def test_cube_input_writes_simulated_cube(self, runner, gss_dir, tmp_path):
        runner.invoke(cli, ["gen-synthetic", "--per-class", "20", "--as-cube", "--out", str(tmp_path)])
        result = runner.invoke(cli, [
            "simulate", "--input", str(tmp_path / "cube.hsc"), "--labels", str(tmp_path / "labels_map.csv"),
            "--report", str(gss_dir / "selection.json"), "--out", str(tmp_path / "out"),
        ])
        assert result.exit_code == 0, result.output
        simulated = load_cube(tmp_path / "out" / "simulated.hsc")
        assert simulated.bands == 2
        assert simulated.axis.wavelengths_nm == (412.0, 436.0)


class TestPlotCommand:

    def test_redraws_svg(self, runner, gss_dir, tmp_path):
        out = tmp_path / "plot.svg"
        result = runner.invoke(cli, ["plot", "--input", str(gss_dir / "ibra_theta_10.csv"), "--out", str(out),
                                     "--title", "planted"])
        assert result.exit_code == 0, result.output
        svg = out.read_text()
        assert svg.count('class="candidate"') == 3
        assert "planted" in svg

    def test_invalid_csv(self, runner, tmp_path):
        (tmp_path / "x.csv").write_text("a\n1\n")
        result = runner.invoke(cli, ["plot", "--input", str(tmp_path / "x.csv"), "--out", str(tmp_path / "x.svg")])
        assert result.exit_code == 1
