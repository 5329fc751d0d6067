"""Readers and writers for pRF parameter CSVs, BOLD CSVs and RETSTIM stimulus files."""

import csv
import io
import math
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np
from pydantic import ValidationError

from ..lib.errors import FormatError
from ..lib.logging import get_logger
from ..lib.textio import TokenReader, format_float, format_row, write_lines
from ..models.prf import AngleConvention, BoldSeries, PrfParameters, Stimulus

logger = get_logger(__name__)

PRF_HEADER = ["vertex", "ecc", "ang", "sigma", "r2"]
STIMULUS_MAGIC = "RETSTIM"
KNOWN_METADATA = {"angle_convention", "prf_tool", "ang_units", "tr"}


def _split_metadata(text: str, source: str) -> Tuple[Dict[str, str], List[str]]:
    """Separate ``# key: value`` metadata lines from the CSV body."""
    metadata: Dict[str, str] = {}
    body: List[str] = []
    for raw in text.splitlines():
        stripped = raw.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            content = stripped.lstrip("#").strip()
            if ":" in content:
                key, value = (part.strip() for part in content.split(":", 1))
                if key in KNOWN_METADATA:
                    metadata[key] = value
            continue
        body.append(stripped)
    if not body:
        raise FormatError(f"{source}: no CSV header")
    return metadata, body


def _to_float(token: str, source: str, line: int) -> float:
    try:
        return float(token)
    except ValueError as e:
        raise FormatError(f"{source}:{line}: invalid number '{token}'") from e


def polar_to_cartesian(ecc: np.ndarray, angle_deg: np.ndarray, convention: AngleConvention) -> np.ndarray:
    """Cartesian visual coordinates from eccentricity and a declared polar-angle convention."""
    if convention == AngleConvention.CW_FROM_UPPER_VERTICAL:
        angle_deg = 90.0 - angle_deg
    theta = np.radians(angle_deg)
    return np.column_stack([ecc * np.cos(theta), ecc * np.sin(theta)])


def cartesian_to_polar(visual: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Eccentricity and counter-clockwise polar angle in (-180, 180] degrees."""
    visual = np.asarray(visual, dtype=float)
    ecc = np.hypot(visual[:, 0], visual[:, 1])
    angle = np.degrees(np.arctan2(visual[:, 1], visual[:, 0]))
    return ecc, np.where(angle <= -180.0, angle + 360.0, angle)


def parse_prf_csv(text: str, source: str = "<prf>", vertex_count: Optional[int] = None) -> PrfParameters:
    """
    Parse a pRF CSV (``vertex,ecc,ang,sigma,r2``) into internal Cartesian form.

    Metadata lines declare the angle convention (``# angle_convention:``),
    the producing tool (``# prf_tool:``) and optionally ``# ang_units: rad``.

    Raises:
        FormatError: On a wrong header, unknown convention, bad numbers or
            vertex ids that are not a permutation of 0..n-1
    """
    metadata, body = _split_metadata(text, source)
    try:
        convention = AngleConvention(metadata.get("angle_convention", AngleConvention.MATH_CCW.value))
    except ValueError as e:
        raise FormatError(f"{source}: unknown angle convention '{metadata['angle_convention']}'") from e
    units = metadata.get("ang_units", "deg")
    if units not in ("deg", "rad"):
        raise FormatError(f"{source}: unknown angle units '{units}'")

    rows = list(csv.reader(body))
    if [c.strip() for c in rows[0]] != PRF_HEADER:
        raise FormatError(f"{source}: header must be '{','.join(PRF_HEADER)}'")

    records = []
    for line, row in enumerate(rows[1:], start=2):
        if len(row) != len(PRF_HEADER):
            raise FormatError(f"{source}:{line}: expected {len(PRF_HEADER)} columns, got {len(row)}")
        try:
            vertex = int(row[0])
        except ValueError as e:
            raise FormatError(f"{source}:{line}: invalid vertex id '{row[0]}'") from e
        records.append([vertex] + [_to_float(token, source, line) for token in row[1:]])

    table = np.array(records, dtype=float).reshape(-1, 5)
    vertices = table[:, 0].astype(np.int64)
    n = len(vertices) if vertex_count is None else vertex_count
    if len(vertices) != n or not np.array_equal(np.sort(vertices), np.arange(n)):
        raise FormatError(f"{source}: vertex ids must cover 0..{n - 1} exactly once")
    table = table[np.argsort(vertices)]

    angle = table[:, 2]
    if units == "rad":
        angle = np.degrees(angle)
    visual = polar_to_cartesian(table[:, 1], angle, convention)
    try:
        return PrfParameters(
            visual=visual,
            prf_size=table[:, 3],
            variance_explained=table[:, 4],
            prf_tool=metadata.get("prf_tool", "synthetic"),
            angle_convention=convention,
        )
    except ValidationError as e:
        raise FormatError(f"{source}: {e.errors()[0]['msg']}") from e


def load_prf_csv(path: Path, vertex_count: Optional[int] = None) -> PrfParameters:
    """Load a pRF CSV file."""
    path = Path(path)
    params = parse_prf_csv(path.read_text(encoding="utf-8"), str(path), vertex_count)
    logger.debug(
        "prf_loaded",
        path=str(path),
        vertices=params.vertex_count,
        convention=params.angle_convention.value,
        prf_tool=params.prf_tool,
    )
    return params


def render_prf_csv(
    visual: np.ndarray,
    prf_size: np.ndarray,
    variance_explained: np.ndarray,
    prf_tool: str = "synthetic",
) -> str:
    """Render pRF parameters in the internal angle convention."""
    ecc, angle = cartesian_to_polar(visual)
    buffer = io.StringIO()
    buffer.write(f"# angle_convention: {AngleConvention.MATH_CCW.value}\n")
    buffer.write(f"# prf_tool: {prf_tool}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(PRF_HEADER)
    for vertex in range(len(ecc)):
        writer.writerow([
            vertex,
            format_float(ecc[vertex]),
            format_float(angle[vertex]),
            format_float(prf_size[vertex]),
            format_float(variance_explained[vertex]),
        ])
    return buffer.getvalue()


def save_prf_csv(
    path: Path,
    visual: np.ndarray,
    prf_size: np.ndarray,
    variance_explained: np.ndarray,
    prf_tool: str = "synthetic",
) -> Path:
    """Write a pRF CSV with round-trip precision."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(render_prf_csv(visual, prf_size, variance_explained, prf_tool), encoding="utf-8")
    return path


def load_bold_csv(path: Path, tr: Optional[float] = None) -> BoldSeries:
    """
    Load a BOLD CSV: one row per vertex, first column ``vertex``.

    Args:
        path: CSV file
        tr: Seconds per sample; defaults to the ``# tr:`` metadata line, else 1.0
    """
    path = Path(path)
    metadata, body = _split_metadata(path.read_text(encoding="utf-8"), str(path))
    rows = list(csv.reader(body))
    if not rows[0] or rows[0][0].strip() != "vertex":
        raise FormatError(f"{path}: first column must be 'vertex'")
    width = len(rows[0])
    vertex_ids, samples = [], []
    for line, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            raise FormatError(f"{path}:{line}: expected {width} columns, got {len(row)}")
        try:
            vertex_ids.append(int(row[0]))
        except ValueError as e:
            raise FormatError(f"{path}:{line}: invalid vertex id '{row[0]}'") from e
        samples.append([_to_float(token, str(path), line) for token in row[1:]])

    if tr is None:
        tr = _to_float(metadata["tr"], str(path), 1) if "tr" in metadata else 1.0
    try:
        return BoldSeries(samples=np.array(samples, dtype=float), tr=tr, vertex_ids=vertex_ids)
    except ValidationError as e:
        raise FormatError(f"{path}: {e.errors()[0]['msg']}") from e


def save_bold_csv(series: BoldSeries, path: Path) -> Path:
    """Write BOLD series as CSV with a ``# tr:`` metadata line."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    buffer = io.StringIO()
    buffer.write(f"# tr: {format_float(series.tr)}\n")
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["vertex"] + [f"t{k}" for k in range(series.length)])
    for vertex, row in zip(series.vertex_ids, series.samples):
        writer.writerow([int(vertex)] + [format_float(v) for v in row])
    path.write_text(buffer.getvalue(), encoding="utf-8")
    return path


def load_stimulus(path: Path) -> Stimulus:
    """
    Load a RETSTIM file.

    Raises:
        FormatError: If the file is malformed or holds non-binary values
    """
    path = Path(path)
    reader = TokenReader.from_path(path)
    reader.expect_header(STIMULUS_MAGIC)
    tokens = reader.next_line(5)
    try:
        frames, h, w = (int(t) for t in tokens[:3])
        extent, tr = float(tokens[3]), float(tokens[4])
    except ValueError as e:
        raise FormatError(f"{path}: invalid stimulus header ({e})") from e
    if frames < 1 or h < 2 or w < 2 or not (extent > 0 and math.isfinite(extent)) or not tr > 0:
        raise FormatError(f"{path}: invalid stimulus dimensions")

    stack = np.empty((frames, h * w), dtype=np.uint8)
    for k in range(frames):
        row = reader.next_line(h * w)
        if any(token not in ("0", "1") for token in row):
            raise FormatError(f"{path}: frame {k} is not binary")
        stack[k] = np.array(row, dtype=np.uint8)
    reader.ensure_exhausted()
    return Stimulus(frames=stack.reshape(frames, h, w), field_extent=extent, tr=tr)


def save_stimulus(stimulus: Stimulus, path: Path) -> Path:
    """Write a stimulus as RETSTIM text."""
    h, w = stimulus.grid_resolution
    lines = [
        f"{STIMULUS_MAGIC} 1",
        f"{stimulus.frame_count} {h} {w} {format_row((stimulus.field_extent, stimulus.tr))}",
    ]
    lines.extend(" ".join(map(str, frame.ravel().tolist())) for frame in stimulus.frames)
    return write_lines(path, lines)
