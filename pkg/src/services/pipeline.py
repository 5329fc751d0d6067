"""End-to-end pipeline: flatten, register, apply, evaluate and report one case."""

from contextlib import contextmanager
from pathlib import Path
from typing import Dict, Iterator, List, Optional, Sequence, Tuple

from joblib import Parallel, delayed
from pydantic import BaseModel, Field

from ..lib.config import DEFAULT_DV_WEIGHTING, DEFAULT_FLATTEN_WEIGHTING, DEFAULT_REFINE_ITERATIONS, UV_FILE
from ..lib.errors import DrrmError, PipelineStageError
from ..lib.logging import get_logger
from ..models.registration import RegistrationConfig
from ..models.retinotopic_map import RetinotopicMap
from .case_directory import build_case_map, load_case_bold, load_case_geometry, load_case_stimulus, open_case
from .evaluation_runner import evaluate_run
from .flattening import flatten_mesh
from .mesh_io import save_uv
from .plotting import plot_disk_map, write_svg
from .registration import apply_registration, register
from .registration_io import save_registered_prf, save_registration
from .report_generator import generate_report

logger = get_logger(__name__)

PANEL_FILES = {
    "eccentricity_raw": "panel_eccentricity_raw.svg",
    "eccentricity_registered": "panel_eccentricity_registered.svg",
    "polar_angle_raw": "panel_polar_angle_raw.svg",
    "polar_angle_registered": "panel_polar_angle_registered.svg",
}


class PipelineOptions(BaseModel):
    """Options of one pipeline run besides the registration configuration."""

    refine_iterations: int = Field(DEFAULT_REFINE_ITERATIONS, ge=0)
    flatten_weighting: str = Field(DEFAULT_FLATTEN_WEIGHTING)
    dv_weighting: str = Field(DEFAULT_DV_WEIGHTING)
    report_formats: Tuple[str, ...] = Field(("text", "csv", "svg"))
    include_detail: bool = Field(False)


class PipelineResult(BaseModel):
    """Files written by a pipeline run, in the order they were written."""

    output_dir: Path
    files: List[Path] = Field(default_factory=list)
    d_v_structural: Optional[float] = None
    d_v_registered: Optional[float] = None
    f_flip: Optional[int] = None


@contextmanager
def pipeline_stage(stage: str) -> Iterator[None]:
    """Re-raise any failure inside the block as PipelineStageError naming ``stage``."""
    logger.info("pipeline_stage_started", stage=stage)
    try:
        yield
    except PipelineStageError:
        raise
    except (DrrmError, ValueError, OSError) as e:
        logger.error("pipeline_stage_failed", stage=stage, error=str(e), code=getattr(e, "code", type(e).__name__))
        raise PipelineStageError(stage, e) from e


def _flatten_if_needed(case_root: Path, output_dir: Path, options: PipelineOptions, role: str):
    case = open_case(case_root)
    mesh, param, manifest = load_case_geometry(case)
    written = []
    if param is None:
        with pipeline_stage("flatten"):
            param = flatten_mesh(mesh, options.refine_iterations, options.flatten_weighting)
            written.append(save_uv(param.uv, output_dir / f"{role}_{UV_FILE}"))
    return case, mesh, param, manifest, written


def write_panels(subject: RetinotopicMap, registered: RetinotopicMap, output_dir: Path) -> List[Path]:
    """Eccentricity and polar-angle maps on the disk, raw and registered."""
    uv, faces = subject.param.uv, subject.faces
    panels = {
        "eccentricity_raw": (subject.eccentricity, "scalar", "Eccentricity (raw)"),
        "eccentricity_registered": (registered.eccentricity, "scalar", "Eccentricity (registered)"),
        "polar_angle_raw": (subject.polar_angle_deg, "angle", "Polar angle (raw)"),
        "polar_angle_registered": (registered.polar_angle_deg, "angle", "Polar angle (registered)"),
    }
    written = []
    for key, (values, mode, title) in panels.items():
        label = "deg" if mode == "scalar" else "deg, ccw from +x"
        svg = plot_disk_map(uv, faces, values, mode=mode, title=title, label=label)
        written.append(write_svg(svg, output_dir / PANEL_FILES[key]))
    return written


def run_pipeline(
    case_dir: Path,
    template_dir: Path,
    output_dir: Path,
    config: Optional[RegistrationConfig] = None,
    options: Optional[PipelineOptions] = None,
) -> PipelineResult:
    """
    Run flatten (when uv is missing), register, apply, evaluate and report.

    Outputs written before a failing stage stay on disk.

    Args:
        case_dir: Subject case directory
        template_dir: Template case directory
        output_dir: Directory receiving every output file
        config: Registration parameters
        options: Flattening, evaluation and report options

    Returns:
        PipelineResult listing the written files

    Raises:
        PipelineStageError: Wrapping the first constituent failure with its stage
    """
    config = config or RegistrationConfig()
    options = options or PipelineOptions()
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    result = PipelineResult(output_dir=output_dir)
    logger.info("pipeline_started", case=str(case_dir), template=str(template_dir), output_dir=str(output_dir))

    with pipeline_stage("load"):
        case, mesh, param, manifest, written = _flatten_if_needed(Path(case_dir), output_dir, options, "subject")
        result.files.extend(written)
        template_case, t_mesh, t_param, t_manifest, written = _flatten_if_needed(
            Path(template_dir), output_dir, options, "template"
        )
        result.files.extend(written)
        subject = build_case_map(case, mesh, param, manifest)
        template = build_case_map(template_case, t_mesh, t_param, t_manifest)

    with pipeline_stage("register"):
        registration = register(subject, template, config)
        result.files.extend(save_registration(registration, output_dir, config))
        result.f_flip = registration.f_flip

    with pipeline_stage("apply"):
        registered = apply_registration(subject, template, registration.f)
        result.files.append(save_registered_prf(registered, output_dir))
        result.files.extend(write_panels(subject, registered, output_dir))

    with pipeline_stage("evaluate"):
        stimulus = load_case_stimulus(case)
        observed = load_case_bold(case, stimulus.tr)
        report = evaluate_run(
            subject,
            template,
            registration,
            stimulus,
            observed,
            r2_threshold=config.r2_threshold,
            dv_weighting=options.dv_weighting,
            include_detail=options.include_detail,
        )
        result.d_v_structural = report.rows[0].d_v
        result.d_v_registered = report.rows[-1].d_v

    with pipeline_stage("report"):
        result.files.extend(generate_report(report, output_dir, options.report_formats))

    logger.info(
        "pipeline_finished",
        output_dir=str(output_dir),
        files=len(result.files),
        d_v_registered=result.d_v_registered,
        f_flip=result.f_flip,
    )
    return result


def _run_one(
    case_dir: Path,
    template_dir: Path,
    output_dir: Path,
    config: RegistrationConfig,
    options: PipelineOptions,
) -> Dict[str, object]:
    try:
        result = run_pipeline(case_dir, template_dir, output_dir, config, options)
    except PipelineStageError as e:
        return {"case": str(case_dir), "ok": False, "error": e.machine_line()}
    return {"case": str(case_dir), "ok": True, "d_v": result.d_v_registered, "f_flip": result.f_flip}


def run_pipelines(
    cases: Sequence[Path],
    template_dir: Path,
    output_root: Path,
    config: Optional[RegistrationConfig] = None,
    options: Optional[PipelineOptions] = None,
    n_jobs: int = 1,
) -> List[Dict[str, object]]:
    """
    Run the pipeline for several case directories against one template.

    Every case writes to ``output_root/<case name>``; runs are independent,
    so ``n_jobs > 1`` executes them concurrently.

    Returns:
        One status dict per case, in input order
    """
    config = config or RegistrationConfig()
    options = options or PipelineOptions()
    output_root = Path(output_root)
    names = [Path(case).name for case in cases]
    if len(set(names)) != len(names):
        raise ValueError("case directory names must be unique within a batch")
    statuses = Parallel(n_jobs=n_jobs)(
        delayed(_run_one)(Path(case), Path(template_dir), output_root / Path(case).name, config, options)
        for case in cases
    )
    failed = sum(1 for status in statuses if not status["ok"])
    logger.info("pipeline_batch_finished", cases=len(statuses), failed=failed, n_jobs=n_jobs)
    return list(statuses)
