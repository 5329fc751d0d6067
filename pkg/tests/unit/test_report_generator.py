"""Unit tests for report rendering, parsing and merging."""

import pytest

from src.lib.errors import FormatError, UnknownFormat
from src.models.eval_report import EvalReport, EvalRow, VertexDetail
from src.services.report_generator import (
    CSV_COLUMNS,
    emit_report,
    generate_report,
    merge_reports,
    parse_report_csv,
    render_report_csv,
)


def make_row(method, hemisphere="L", d_v=1.0):
    return EvalRow(
        method_label=method,
        hemisphere=hemisphere,
        prf_tool="synthetic",
        d_v=d_v,
        f_flip=0,
        rmse_raw=0.5,
        rmse_reg=0.25,
        pc_raw=0.6,
        pc_reg=0.8,
        aic_raw=-12.5,
        aic_reg=-20.125,
        n_vertices=40,
    )


@pytest.fixture
def report():
    return EvalReport(rows=[make_row("structural", d_v=3.5), make_row("drrm", d_v=1.0 / 3.0)])


class TestTextReport:
    """Tests for the fixed-width table."""

    def test_header_and_rows(self, report):
        lines = emit_report(report, "text").splitlines()

        assert lines[0].startswith("Observers")
        for column in ("d|v|", "F_flip", "RMSE (Raw/Reg)", "Correlation (Raw/Reg)", "AIC (Raw/Reg)"):
            assert column in lines[0]
        assert set(lines[1]) == {"-"}
        assert len(lines) == 4
        assert "Average (L)" in lines[2]
        assert "0.333" in lines[3]
        assert "0.500/0.250" in lines[3]

    def test_same_report_same_text(self, report):
        assert emit_report(report, "text") == emit_report(report, "text")


class TestCsvReport:
    def test_csv_keeps_full_precision(self, report):
        text = render_report_csv(report)

        assert text.splitlines()[0] == ",".join(CSV_COLUMNS)
        assert parse_report_csv(text).rows == report.rows

    def test_reemitting_a_parsed_table_reproduces_its_bytes(self, report):
        text = render_report_csv(report)

        assert render_report_csv(parse_report_csv(text)).encode() == text.encode()

    def test_bad_header(self):
        with pytest.raises(FormatError):
            parse_report_csv("method,d_v\ndrrm,1.0\n")

    def test_bad_value(self, report):
        text = render_report_csv(report).replace("0.25", "quarter")

        with pytest.raises(FormatError):
            parse_report_csv(text)


class TestEmitReport:
    """Tests for emit_report and generate_report."""

    def test_unknown_format(self, report):
        with pytest.raises(UnknownFormat):
            emit_report(report, "pdf")

    def test_empty_report(self):
        with pytest.raises(ValueError):
            emit_report(EvalReport(), "csv")

    def test_svg_is_deterministic(self, report):
        first = emit_report(report, "svg")

        assert "<svg" in first
        assert first == emit_report(report, "svg")

    def test_generate_writes_each_format(self, tmp_path, report):
        written = generate_report(report, tmp_path, formats=("text", "csv"))

        assert [p.name for p in written] == ["report.txt", "report.csv"]
        assert parse_report_csv(written[1].read_text()).rows == report.rows

    def test_generate_writes_vertex_detail(self, tmp_path, report):
        detail = VertexDetail(
            method_label="drrm", vertex=3, dv=0.1, rmse_raw=1.0, rmse_reg=0.5, pc_raw=0.2, pc_reg=0.4,
            aic_raw=1.0, aic_reg=0.5, rss_raw=2.0, rss_reg=1.0,
        )
        written = generate_report(report.model_copy(update={"detail": [detail]}), tmp_path, formats=("csv",))

        assert written[-1].name == "report_vertices.csv"
        assert written[-1].read_text().splitlines()[1].startswith("drrm,3,0.1,")


class TestMergeReports:
    def test_sorted_by_hemisphere_then_structural_first(self):
        merged = merge_reports([
            EvalReport(rows=[make_row("drrm", "R"), make_row("structural", "R")]),
            EvalReport(rows=[make_row("drrm", "L"), make_row("structural", "L")]),
        ])

        assert [(r.hemisphere, r.method_label) for r in merged.rows] == [
            ("L", "structural"),
            ("L", "drrm"),
            ("R", "structural"),
            ("R", "drrm"),
        ]

    def test_nothing_to_merge(self):
        with pytest.raises(ValueError):
            merge_reports([EvalReport()])
