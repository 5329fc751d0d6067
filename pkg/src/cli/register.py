"""Register CLI command: diffeomorphic registration of a subject case to a template case."""

from pathlib import Path
from typing import Optional

import typer

from ..lib.logging import get_logger
from ..services.case_directory import load_case_map, open_case
from ..services.registration import apply_registration, register
from ..services.registration_io import save_registered_prf, save_registration
from .common import CliState, command_errors, resolve_config

logger = get_logger(__name__)


def register_command(
    state: CliState,
    subject_dir: Path,
    template_dir: Path,
    output_dir: Path,
    config_file: Optional[Path] = None,
    smooth_convention: Optional[str] = None,
    dump_mu: bool = False,
) -> None:
    """
    Register a subject to a template and write f, the energy trace and the registered pRF map.
    """
    with command_errors("register"):
        config = resolve_config(state, config_file, smooth_convention=smooth_convention)
        subject = load_case_map(open_case(subject_dir))
        template = load_case_map(open_case(template_dir))

        result = register(subject, template, config)
        save_registration(result, output_dir, config, subject=subject, dump_mu=dump_mu)
        save_registered_prf(apply_registration(subject, template, result.f), output_dir)

        typer.echo(f"Registration written: {output_dir}")
        typer.echo(f"Iterations: {result.iterations}  Stop reason: {result.stop_reason.value}")
        typer.echo(
            f"Energy: {result.energy_trace[0].energy.total:.6g} -> {result.final_energy.total:.6g}"
        )
        typer.echo(f"Max |mu|: {result.final_mu_max:.4f}  F_flip: {result.f_flip}")
