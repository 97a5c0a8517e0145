import json

import numpy as np
import pandas as pd
import pytest

from bandpick.collinearity import interband_redundancy
from bandpick.crossval import FoldMetrics, MetricsReport
from bandpick.datacube import WavelengthAxis
from bandpick.errors import BandpickError, CubeFormatError
from bandpick.reports import (
    ReportWriter,
    bands_from_text,
    evaluation_frame,
    filter_bank_frame,
    ibra_frame,
    metrics_payload,
    ranking_frame,
    read_filter_bank_csv,
    read_ibra_csv,
    read_ranking_csv,
    read_selection_json,
    read_table_csv,
    render_distance_svg,
    selection_payload,
    sweep_table_frame,
)
from bandpick.saliency import rank_by_entropy
from bandpick.selection import SelectionReport, TraceStep
from bandpick.sensorsim import build_filter_bank


def metrics_of(*values) -> MetricsReport:
    return MetricsReport.aggregate([
        FoldMetrics(oa=v, macro_precision=v, macro_recall=v, macro_f1=v) for v in values
    ])


def selection_report(theta=10.0, f1=0.9) -> SelectionReport:
    return SelectionReport(
        k=2,
        theta=theta,
        n_bands=12,
        candidates=[3, 6, 9],
        selected=[3, 9],
        selected_wavelengths_nm=[412.0, 436.0],
        best_f1=f1,
        metrics=metrics_of(f1 - 0.01, f1 + 0.01),
        trace=[
            TraceStep(state=[3, 9], f1=f1),
            TraceStep(state=[9, 6], removed=3, added=6, f1=f1 - 0.3),
        ],
    )


class TestIbraReport:

    def test_round_trip(self, tmp_path, planted_matrix, planted):
        result = interband_redundancy(planted_matrix, 10.0)
        writer = ReportWriter(tmp_path)
        writer.add_csv("ibra.csv", ibra_frame(result, planted.axis))
        writer.flush()

        frame = read_ibra_csv(tmp_path / "ibra.csv")
        assert frame["d"].tolist() == list(result.d)
        assert frame["d_left"].tolist() == list(result.d_left)
        assert frame.loc[frame["is_candidate"], "band_index"].tolist() == list(result.candidates)
        assert frame["wavelength_nm"].tolist() == list(planted.axis.wavelengths_nm)

    def test_axis_mismatch(self, planted_matrix):
        with pytest.raises(BandpickError):
            ibra_frame(interband_redundancy(planted_matrix, 10.0), WavelengthAxis.from_indices(5))

    def test_wrong_columns(self, tmp_path):
        (tmp_path / "other.csv").write_text("a,b\n1,2\n")
        with pytest.raises(CubeFormatError):
            read_ibra_csv(tmp_path / "other.csv")

    def test_missing_file(self, tmp_path):
        with pytest.raises(BandpickError):
            read_ibra_csv(tmp_path / "absent.csv")

    def test_svg_marks_candidates(self, planted_matrix, planted):
        frame = ibra_frame(interband_redundancy(planted_matrix, 10.0), planted.axis)
        svg = render_distance_svg(frame, title="θ=10")
        assert svg.startswith("<svg")
        assert svg.count('class="candidate"') == 3
        assert svg.count("<polyline") == 1
        assert "θ=10" in svg


class TestRankingReport:

    def test_round_trip(self, tmp_path, planted_matrix, planted):
        ranking = rank_by_entropy(planted_matrix, [3, 6, 9])
        frame = ranking_frame(ranking, planted.axis)
        frame.to_csv(tmp_path / "ranking.csv", index=False)

        read = read_ranking_csv(tmp_path / "ranking.csv")
        assert read["band_index"].tolist() == list(ranking.band_index)
        assert read["rank"].tolist() == [1, 2, 3]
        np.testing.assert_allclose(read["entropy_bits"].to_numpy(), ranking.entropy_bits, rtol=1e-12)


class TestSelectionReport:

    def test_payload_keys(self):
        payload = selection_payload(selection_report())
        assert payload["selected_bands"] == [3, 9]
        assert payload["metrics"]["f1"] == pytest.approx(0.9)
        assert set(payload["metrics"]["std"]) == {"oa", "prec", "rec", "f1"}
        assert len(payload["metrics"]["per_fold"]) == 2
        assert payload["trace"][1] == {"state": [9, 6], "removed": 3, "added": 6, "f1": pytest.approx(0.6)}

    def test_empty_report_payload(self):
        payload = selection_payload(SelectionReport(k=2, theta=4.0, n_bands=12, empty=True))
        assert payload["metrics"] is None
        assert payload["empty"] is True

    def test_json_round_trip(self, tmp_path):
        writer = ReportWriter(tmp_path)
        writer.add_json("selection.json", selection_payload(selection_report()))
        writer.flush()
        payload = read_selection_json(tmp_path / "selection.json")
        assert payload["n_bands"] == 12
        assert payload["selected_wavelengths_nm"] == [412.0, 436.0]

    def test_json_missing_field(self, tmp_path):
        (tmp_path / "selection.json").write_text(json.dumps({"k": 2}))
        with pytest.raises(CubeFormatError):
            read_selection_json(tmp_path / "selection.json")

    def test_json_invalid(self, tmp_path):
        (tmp_path / "selection.json").write_text("{")
        with pytest.raises(CubeFormatError):
            read_selection_json(tmp_path / "selection.json")

    def test_metrics_payload_std(self):
        payload = metrics_payload(metrics_of(0.5, 0.7))
        assert payload["std"]["oa"] == pytest.approx(0.1)


class TestTables:

    def test_sweep_table(self, tmp_path):
        reports = [selection_report(10.0, 0.9), SelectionReport(k=2, theta=4.0, n_bands=12, empty=True)]
        writer = ReportWriter(tmp_path)
        writer.add_csv("table.csv", sweep_table_frame(reports))
        writer.flush()

        table = read_table_csv(tmp_path / "table.csv")
        assert table["theta"].tolist() == [10.0, 4.0]
        assert bands_from_text(table["selected_bands"][0]) == [3, 9]
        assert table["f1"][0] == pytest.approx(0.9)
        assert table["f1_std"][0] == pytest.approx(0.01)
        assert np.isnan(table["f1"][1])
        assert bands_from_text(table["selected_bands"][1]) == []

    def test_evaluation_frame(self):
        frame = evaluation_frame({"full_spectrum": metrics_of(0.8), "ibra_theta_10": metrics_of(0.6, 0.8)})
        assert frame["configuration"].tolist() == ["full_spectrum", "ibra_theta_10"]
        assert frame["oa"].tolist() == pytest.approx([0.8, 0.7])
        assert frame["oa_std"].tolist() == pytest.approx([0.0, 0.1])

    def test_filter_bank_round_trip(self, tmp_path):
        bank = build_filter_bank([9, 3], WavelengthAxis.from_indices(12), fwhm_bands=2.5)
        writer = ReportWriter(tmp_path)
        writer.add_csv("filter_bank.csv", filter_bank_frame(bank))
        writer.flush()

        read = read_filter_bank_csv(tmp_path / "filter_bank.csv")
        assert read.centers == (3, 9)
        assert read.fwhm_bands == 2.5
        np.testing.assert_allclose(read.weights, bank.weights, rtol=1e-12)

    def test_filter_bank_invalid(self, tmp_path):
        pd.DataFrame({"x": [1]}).to_csv(tmp_path / "bank.csv", index=False)
        with pytest.raises(CubeFormatError):
            read_filter_bank_csv(tmp_path / "bank.csv")

    @pytest.mark.parametrize("text, expected", [("3,9", [3, 9]), ("3 9", [3, 9]), ("", []), (None, [])])
    def test_bands_from_text(self, text, expected):
        assert bands_from_text(text) == expected


class TestReportWriter:

    def test_creates_directory(self, tmp_path):
        writer = ReportWriter(tmp_path / "a" / "b")
        writer.add_text("note.txt", "ok\n")
        assert writer.names == ["note.txt"]
        paths = writer.flush()
        assert paths == [tmp_path / "a" / "b" / "note.txt"]
        assert writer.names == []

    def test_identical_runs_identical_bytes(self, tmp_path, planted_matrix, planted):
        frame = ibra_frame(interband_redundancy(planted_matrix, 10.0), planted.axis)
        for name in ("first", "second"):
            writer = ReportWriter(tmp_path / name)
            writer.add_csv("ibra.csv", frame)
            writer.add_json("selection.json", selection_payload(selection_report()))
            writer.flush()
        for name in ("ibra.csv", "selection.json"):
            assert (tmp_path / "first" / name).read_bytes() == (tmp_path / "second" / name).read_bytes()

    def test_overwrites(self, tmp_path):
        (tmp_path / "note.txt").write_text("old")
        writer = ReportWriter(tmp_path)
        writer.add_text("note.txt", "new")
        writer.flush()
        assert (tmp_path / "note.txt").read_text() == "new"

    def test_nothing_written_before_flush(self, tmp_path):
        writer = ReportWriter(tmp_path / "out")
        writer.add_text("note.txt", "x")
        assert not (tmp_path / "out").exists()
