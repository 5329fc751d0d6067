"""Evaluation report rendering: text table, CSV and SVG bar chart."""

import csv
import io
from pathlib import Path
from typing import Iterable, List, Sequence

from ..lib.config import REPORT_BASENAME, VERTEX_REPORT_FILE
from ..lib.errors import FormatError, UnknownFormat
from ..lib.logging import get_logger
from ..lib.textio import format_float
from ..models.eval_report import EvalReport, EvalRow
from .plotting import plot_report_bars

logger = get_logger(__name__)

REPORT_FORMATS = ("text", "csv", "svg")
FORMAT_SUFFIXES = {"text": ".txt", "csv": ".csv", "svg": ".svg"}
CSV_COLUMNS = [
    "method",
    "hemisphere",
    "prf_tool",
    "d_v",
    "f_flip",
    "rmse_raw",
    "rmse_reg",
    "pc_raw",
    "pc_reg",
    "aic_raw",
    "aic_reg",
    "n_vertices",
]
DETAIL_COLUMNS = [
    "method",
    "vertex",
    "dv",
    "rmse_raw",
    "rmse_reg",
    "pc_raw",
    "pc_reg",
    "aic_raw",
    "aic_reg",
    "rss_raw",
    "rss_reg",
]
_INT_COLUMNS = {"f_flip", "n_vertices"}
_TEXT_COLUMNS = {"method", "hemisphere", "prf_tool"}


def _row_values(row: EvalRow) -> List[str]:
    values = row.model_dump()
    values["method"] = values.pop("method_label")
    rendered = []
    for column in CSV_COLUMNS:
        value = values[column]
        if column in _TEXT_COLUMNS:
            rendered.append(str(value))
        elif column in _INT_COLUMNS:
            rendered.append(str(int(value)))
        else:
            rendered.append(format_float(value))
    return rendered


def render_report_csv(report: EvalReport) -> str:
    """One header line plus one line per row; floats at round-trip precision."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    for row in report.rows:
        writer.writerow(_row_values(row))
    return buffer.getvalue()


def parse_report_csv(text: str, source: str = "<report>") -> EvalReport:
    """
    Parse a report CSV written by ``render_report_csv``.

    Raises:
        FormatError: On a wrong header, column count or value
    """
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != CSV_COLUMNS:
        raise FormatError(f"{source}: header must be '{','.join(CSV_COLUMNS)}'", stage="report")
    parsed = []
    for line, values in enumerate(rows[1:], start=2):
        if len(values) != len(CSV_COLUMNS):
            raise FormatError(f"{source}:{line}: expected {len(CSV_COLUMNS)} columns", stage="report")
        record = dict(zip(CSV_COLUMNS, values))
        try:
            parsed.append(
                EvalRow(
                    method_label=record["method"],
                    hemisphere=record["hemisphere"],
                    prf_tool=record["prf_tool"],
                    **{
                        column: int(record[column]) if column in _INT_COLUMNS else float(record[column])
                        for column in CSV_COLUMNS
                        if column not in _TEXT_COLUMNS
                    },
                )
            )
        except ValueError as e:
            raise FormatError(f"{source}:{line}: {e}", stage="report") from e
    return EvalReport(rows=parsed)


def load_report_csv(path: Path) -> EvalReport:
    path = Path(path)
    return parse_report_csv(path.read_text(encoding="utf-8"), str(path))


def _pair(raw: float, reg: float) -> str:
    return f"{raw:.3f}/{reg:.3f}"


def render_report_text(report: EvalReport) -> str:
    """
    Fixed-width table with columns d|v|, F_flip, RMSE, Correlation and AIC.

    Paired columns show Raw/Reg.
    """
    header = ["Observers", "Method", "PRF Tool", "d|v|", "F_flip", "RMSE (Raw/Reg)", "Correlation (Raw/Reg)",
              "AIC (Raw/Reg)", "N"]
    body = [
        [
            row.observers_label,
            row.method_label,
            row.prf_tool,
            f"{row.d_v:.3f}",
            str(row.f_flip),
            _pair(row.rmse_raw, row.rmse_reg),
            _pair(row.pc_raw, row.pc_reg),
            _pair(row.aic_raw, row.aic_reg),
            str(row.n_vertices),
        ]
        for row in report.rows
    ]
    widths = [max(len(cells[k]) for cells in [header] + body) for k in range(len(header))]
    lines = ["  ".join(cell.ljust(width) for cell, width in zip(cells, widths)).rstrip() for cells in [header] + body]
    lines.insert(1, "-" * len(lines[0]))
    return "\n".join(lines) + "\n"


def emit_report(report: EvalReport, output_format: str) -> str:
    """
    Render a report.

    Args:
        report: Nonempty report
        output_format: "text", "csv" or "svg"

    Returns:
        Rendered text; identical reports give identical output

    Raises:
        UnknownFormat: If the format is not supported
        ValueError: If the report has no rows
    """
    if output_format not in REPORT_FORMATS:
        raise UnknownFormat(f"unknown report format '{output_format}' (expected one of {', '.join(REPORT_FORMATS)})")
    if not report.rows:
        raise ValueError("report has no rows")
    if output_format == "csv":
        return render_report_csv(report)
    if output_format == "svg":
        return plot_report_bars(report)
    return render_report_text(report)


def render_vertex_detail_csv(report: EvalReport) -> str:
    """Vertex-level table behind the report rows."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(DETAIL_COLUMNS)
    for entry in report.detail:
        values = entry.model_dump()
        writer.writerow(
            [values["method_label"], values["vertex"]] + [format_float(values[c]) for c in DETAIL_COLUMNS[2:]]
        )
    return buffer.getvalue()


def generate_report(
    report: EvalReport,
    output_dir: Path,
    formats: Sequence[str] = ("text", "csv"),
) -> List[Path]:
    """
    Write ``report.<ext>`` files for each requested format.

    The vertex-level table is written alongside when the report carries one.

    Returns:
        Written paths, in format order
    """
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for output_format in formats:
        rendered = emit_report(report, output_format)
        suffix = FORMAT_SUFFIXES[output_format]
        report_file = output_dir / f"{REPORT_BASENAME}{suffix}"
        report_file.write_text(rendered, encoding="utf-8")
        written.append(report_file)
    if report.detail:
        detail_file = output_dir / VERTEX_REPORT_FILE
        detail_file.write_text(render_vertex_detail_csv(report), encoding="utf-8")
        written.append(detail_file)
    logger.info("report_generated", files=[str(p) for p in written])
    return written


def merge_reports(reports: Iterable[EvalReport]) -> EvalReport:
    """Concatenate the rows of several reports, sorted by hemisphere then method."""
    rows = [row for report in reports for row in report.rows]
    if not rows:
        raise ValueError("no report rows to merge")
    rows.sort(key=lambda row: (row.hemisphere, row.method_label != "structural", row.method_label))
    return EvalReport(rows=rows)
