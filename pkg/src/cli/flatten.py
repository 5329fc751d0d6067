"""Flatten CLI command: harmonic disk map of a mesh patch."""

from pathlib import Path
from typing import Optional

import typer

from ..lib.logging import get_logger
from ..services.flattening import conformal_error, harmonic_disk_map, refine_with_trace
from ..services.mesh_io import load_mesh, save_uv
from ..services.plotting import plot_disk_wireframe, write_svg
from .common import command_errors

logger = get_logger(__name__)


def flatten_command(
    mesh_file: Path,
    output_file: Path,
    refine: int = 0,
    plot: Optional[Path] = None,
    weighting: str = "cotangent",
) -> None:
    """
    Flatten a disk-topology mesh onto the unit disk and write RETUV.
    """
    with command_errors("flatten"):
        mesh = load_mesh(mesh_file)
        param = harmonic_disk_map(mesh, weighting=weighting)
        param, trace = refine_with_trace(mesh, param, refine)
        save_uv(param.uv, output_file)
        distortion = conformal_error(mesh, param)
        if plot is not None:
            write_svg(
                plot_disk_wireframe(param.uv, mesh.faces, distortion.per_face, title="Conformal distortion"),
                plot,
            )

        typer.echo(f"Flattened: {output_file}")
        typer.echo(f"Vertices: {mesh.vertex_count}  Faces: {mesh.face_count}")
        typer.echo(f"Mean |mu|: {distortion.mean_abs:.6f}  Max |mu|: {distortion.max_abs:.6f}")
        if refine:
            typer.echo(f"Refine passes accepted: {len(trace) - 1} of {refine}")
