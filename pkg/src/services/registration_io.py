"""Files written by a registration run: energy trace, summary JSON and the registered map."""

import csv
import io
import json
from pathlib import Path
from typing import List, Optional

import numpy as np

from ..lib.config import (
    ENERGY_TRACE_FILE,
    MU_DUMP_FILE,
    REGISTERED_PRF_FILE,
    REGISTRATION_MAP_FILE,
    REGISTRATION_SUMMARY_FILE,
)
from ..lib.errors import FormatError, MissingCaseFile
from ..lib.logging import get_logger
from ..lib.textio import format_float
from ..models.registration import EnergyTerms, IterationRecord, RegistrationConfig, RegistrationResult, StopReason
from ..models.retinotopic_map import RetinotopicMap
from .beltrami import compute_beltrami
from .mesh_io import load_uv, save_mu, save_uv
from .mesh_topology import count_flipped
from .prf_io import save_prf_csv

logger = get_logger(__name__)

TRACE_COLUMNS = ["iteration", "data_term", "smooth_term", "total", "step_length", "mu_max"]


def render_energy_trace(result: RegistrationResult) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for record in result.energy_trace:
        writer.writerow([
            record.iteration,
            format_float(record.energy.data_term),
            format_float(record.energy.smooth_term),
            format_float(record.energy.total),
            format_float(record.step_length),
            format_float(record.mu_max),
        ])
    return buffer.getvalue()


def parse_energy_trace(text: str, source: str = "<trace>") -> List[IterationRecord]:
    """
    Parse an energy trace CSV.

    Raises:
        FormatError: On a wrong header or malformed values
    """
    rows = list(csv.reader(io.StringIO(text)))
    if not rows or rows[0] != TRACE_COLUMNS:
        raise FormatError(f"{source}: header must be '{','.join(TRACE_COLUMNS)}'", stage="register")
    records = []
    for line, row in enumerate(rows[1:], start=2):
        try:
            iteration, data_term, smooth_term, total, step_length, mu_max = row
            records.append(
                IterationRecord(
                    iteration=int(iteration),
                    energy=EnergyTerms(data_term=float(data_term), smooth_term=float(smooth_term), total=float(total)),
                    step_length=float(step_length),
                    mu_max=float(mu_max),
                )
            )
        except ValueError as e:
            raise FormatError(f"{source}:{line}: {e}", stage="register") from e
    return records


def registration_summary(result: RegistrationResult, config: Optional[RegistrationConfig] = None) -> dict:
    """JSON-ready summary of a run; contains no timestamps so re-runs are identical."""
    summary = {
        "converged": result.converged,
        "stop_reason": result.stop_reason.value,
        "iterations": result.iterations,
        "initial_energy": result.energy_trace[0].energy.total,
        "final_energy": result.final_energy.total,
        "final_mu_max": result.final_mu_max,
        "f_flip": result.f_flip,
    }
    if config is not None:
        summary["config"] = config.model_dump(mode="json")
    return summary


def save_registration(
    result: RegistrationResult,
    output_dir: Path,
    config: Optional[RegistrationConfig] = None,
    subject: Optional[RetinotopicMap] = None,
    dump_mu: bool = False,
) -> List[Path]:
    """
    Write ``f.retuv``, ``energy_trace.csv`` and ``registration.json``.

    Args:
        result: Registration outcome
        output_dir: Output directory
        config: Configuration to record in the summary
        subject: Subject map; needed for ``dump_mu``
        dump_mu: Also write the Beltrami coefficient of f as ``mu.retmu``
    """
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    written = [
        save_uv(result.f, output_dir / REGISTRATION_MAP_FILE),
    ]
    trace_path = output_dir / ENERGY_TRACE_FILE
    trace_path.write_text(render_energy_trace(result), encoding="utf-8")
    summary_path = output_dir / REGISTRATION_SUMMARY_FILE
    summary_path.write_text(
        json.dumps(registration_summary(result, config), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    written.extend([trace_path, summary_path])
    if dump_mu:
        if subject is None:
            raise ValueError("dump_mu needs the subject map")
        field = compute_beltrami(subject.faces, subject.param.uv, result.f)
        written.append(save_mu(field, output_dir / MU_DUMP_FILE))
    logger.info("registration_written", output_dir=str(output_dir), files=len(written))
    return written


def load_registration(output_dir: Path, subject: RetinotopicMap) -> RegistrationResult:
    """
    Rebuild a RegistrationResult from a registration output directory.

    ``f_flip`` is recounted on the loaded map.

    Raises:
        MissingCaseFile: If an output file is absent
        FormatError: If a file is malformed or f does not match the subject
    """
    output_dir = Path(output_dir)
    paths = {name: output_dir / name for name in (REGISTRATION_MAP_FILE, ENERGY_TRACE_FILE, REGISTRATION_SUMMARY_FILE)}
    for path in paths.values():
        if not path.is_file():
            raise MissingCaseFile(f"{path}: registration output not found", stage="evaluate")
    f = load_uv(paths[REGISTRATION_MAP_FILE])
    if len(f) != subject.vertex_count:
        raise FormatError(
            f"{paths[REGISTRATION_MAP_FILE]}: {len(f)} positions for {subject.vertex_count} subject vertices"
        )
    trace = parse_energy_trace(paths[ENERGY_TRACE_FILE].read_text(encoding="utf-8"), str(paths[ENERGY_TRACE_FILE]))
    try:
        summary = json.loads(paths[REGISTRATION_SUMMARY_FILE].read_text(encoding="utf-8"))
        stop_reason = StopReason(summary["stop_reason"])
        converged = bool(summary["converged"])
        final_mu_max = float(summary["final_mu_max"])
    except (json.JSONDecodeError, KeyError, ValueError) as e:
        raise FormatError(f"{paths[REGISTRATION_SUMMARY_FILE]}: invalid summary ({e})") from e
    return RegistrationResult(
        f=f,
        energy_trace=trace,
        final_mu_max=final_mu_max,
        converged=converged,
        stop_reason=stop_reason,
        f_flip=count_flipped(f, subject.faces),
    )


def save_registered_prf(registered: RetinotopicMap, output_dir: Path) -> Path:
    """Write the registered map's pRF parameters as ``registered_prf.csv``."""
    return save_prf_csv(
        Path(output_dir) / REGISTERED_PRF_FILE,
        np.asarray(registered.visual),
        np.asarray(registered.prf_size),
        np.asarray(registered.variance_explained),
        registered.prf_tool.value,
    )
