"""SVG rendering of disk maps and report charts with matplotlib."""

import io
from pathlib import Path
from typing import Optional, Sequence

import matplotlib
import numpy as np
from matplotlib.figure import Figure
from matplotlib.tri import Triangulation

from ..lib.config import PLOT_SIZE_INCHES, SVG_HASH_SALT
from ..lib.logging import get_logger
from ..models.eval_report import EvalReport

logger = get_logger(__name__)

COLORMAP_MODES = ("scalar", "angle")
ANGLE_COLORMAP = "twilight"
SCALAR_COLORMAP = "viridis"


def figure_to_svg(figure: Figure) -> str:
    """Render a figure as SVG text without dates or random ids."""
    buffer = io.StringIO()
    with matplotlib.rc_context({"svg.hashsalt": SVG_HASH_SALT}):
        figure.savefig(buffer, format="svg", metadata={"Date": None})
    return buffer.getvalue()


def write_svg(svg: str, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(svg, encoding="utf-8")
    return path


def face_values(faces: np.ndarray, values: np.ndarray, mode: str = "scalar") -> np.ndarray:
    """
    Per-face colour values from per-vertex values.

    Scalars are averaged; angles (degrees) use the circular mean so faces
    straddling the +-180 seam keep a seam-side colour.
    """
    corners = np.asarray(values, dtype=float)[np.asarray(faces)]
    if mode == "angle":
        radians = np.radians(corners)
        mean = np.degrees(np.arctan2(np.sin(radians).mean(axis=1), np.cos(radians).mean(axis=1)))
        return np.where(mean <= -180.0, mean + 360.0, mean)
    return corners.mean(axis=1)


def _disk_axes(figure: Figure, title: Optional[str]):
    ax = figure.add_subplot(1, 1, 1)
    ax.set_aspect("equal")
    ax.set_xlim(-1.05, 1.05)
    ax.set_ylim(-1.05, 1.05)
    ax.set_axis_off()
    if title:
        ax.set_title(title)
    return ax


def plot_disk_map(
    uv: np.ndarray,
    faces: np.ndarray,
    values: np.ndarray,
    mode: str = "scalar",
    title: Optional[str] = None,
    label: Optional[str] = None,
) -> str:
    """
    Triangle-fill rendering of a per-vertex field on the disk.

    Args:
        uv: (nv, 2) disk coordinates
        faces: (nf, 3) faces
        values: (nv,) scalar field, or polar angle in degrees when mode is "angle"
        mode: "scalar" (sequential colormap) or "angle" (cyclic colormap over -180..180)
        title: Optional plot title
        label: Optional colourbar label

    Returns:
        SVG text; identical inputs give identical output
    """
    if mode not in COLORMAP_MODES:
        raise ValueError(f"colormap mode must be one of {COLORMAP_MODES}, got '{mode}'")
    values = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(values)):
        raise ValueError("plotted values must be finite")
    uv = np.asarray(uv, dtype=float)
    colours = face_values(faces, values, mode)

    figure = Figure(figsize=(PLOT_SIZE_INCHES, PLOT_SIZE_INCHES))
    ax = _disk_axes(figure, title)
    triangulation = Triangulation(uv[:, 0], uv[:, 1], np.asarray(faces))
    if mode == "angle":
        image = ax.tripcolor(
            triangulation, facecolors=colours, cmap=ANGLE_COLORMAP, vmin=-180.0, vmax=180.0, edgecolors="none"
        )
    else:
        low, high = float(colours.min()), float(colours.max())
        if low == high:
            low, high = low - 0.5, high + 0.5
        image = ax.tripcolor(
            triangulation, facecolors=colours, cmap=SCALAR_COLORMAP, vmin=low, vmax=high, edgecolors="none"
        )
    colourbar = figure.colorbar(image, ax=ax, shrink=0.8)
    if label:
        colourbar.set_label(label)
    return figure_to_svg(figure)


def plot_disk_wireframe(
    uv: np.ndarray,
    faces: np.ndarray,
    per_face: np.ndarray,
    title: Optional[str] = None,
    label: str = "|mu|",
) -> str:
    """Disk wireframe with faces coloured by a per-face quantity (e.g. conformal distortion)."""
    uv = np.asarray(uv, dtype=float)
    per_face = np.asarray(per_face, dtype=float)
    figure = Figure(figsize=(PLOT_SIZE_INCHES, PLOT_SIZE_INCHES))
    ax = _disk_axes(figure, title)
    triangulation = Triangulation(uv[:, 0], uv[:, 1], np.asarray(faces))
    high = max(float(per_face.max()), 1e-12)
    image = ax.tripcolor(
        triangulation, facecolors=per_face, cmap="magma", vmin=0.0, vmax=high, edgecolors="k", linewidth=0.1
    )
    figure.colorbar(image, ax=ax, shrink=0.8).set_label(label)
    return figure_to_svg(figure)


def _grouped_bars(ax, labels: Sequence[str], raw: Sequence[float], reg: Sequence[float], title: str) -> None:
    positions = np.arange(len(labels))
    ax.bar(positions - 0.2, raw, width=0.4, label="Raw", color="#9e9e9e")
    ax.bar(positions + 0.2, reg, width=0.4, label="Reg", color="#3b6ea8")
    ax.set_xticks(positions)
    ax.set_xticklabels(labels, rotation=20, fontsize=7)
    ax.set_title(title, fontsize=9)


def plot_report_bars(report: EvalReport) -> str:
    """Bar chart of d|v|, RMSE and correlation per report row."""
    labels = [f"{row.method_label} {row.hemisphere}".strip() for row in report.rows]
    figure = Figure(figsize=(3 * PLOT_SIZE_INCHES, PLOT_SIZE_INCHES))
    axes = figure.subplots(1, 3)

    axes[0].bar(np.arange(len(labels)), [row.d_v for row in report.rows], color="#3b6ea8")
    axes[0].set_xticks(np.arange(len(labels)))
    axes[0].set_xticklabels(labels, rotation=20, fontsize=7)
    axes[0].set_title("d|v| (deg)", fontsize=9)
    _grouped_bars(
        axes[1], labels, [row.rmse_raw for row in report.rows], [row.rmse_reg for row in report.rows], "RMSE"
    )
    _grouped_bars(
        axes[2], labels, [row.pc_raw for row in report.rows], [row.pc_reg for row in report.rows], "Correlation"
    )
    axes[2].legend(fontsize=7)
    figure.tight_layout()
    return figure_to_svg(figure)
