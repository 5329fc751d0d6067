"""Case-directory conventions: manifests with checksums, loaders and the synthetic-case writer."""

import json
from pathlib import Path
from typing import Optional, Tuple

import numpy as np
from pydantic import ValidationError

from ..lib.config import (
    BOLD_FILE,
    BOLD_NOISELESS_FILE,
    DEFORMATION_FILE,
    MANIFEST_FILE,
    MESH_FILE,
    PRF_FILE,
    STIMULUS_FILE,
    UV_FILE,
)
from ..lib.errors import ChecksumMismatch, FormatError, MissingCaseFile
from ..lib.hashing import compute_file_hash, verify_file_hash
from ..lib.logging import get_logger
from ..models.case_directory import CaseDirectory, CaseManifest
from ..models.cortical_mesh import CorticalMesh
from ..models.disk_parameterization import DiskParameterization
from ..models.prf import AngleConvention, BoldSeries, Stimulus
from ..models.retinotopic_map import Hemisphere, PrfTool, RetinotopicMap
from ..models.synthetic_spec import SyntheticCase
from .mesh_io import load_mesh, load_uv, save_mesh, save_uv
from .mesh_topology import boundary_loop
from .prf_io import load_bold_csv, load_prf_csv, load_stimulus, save_bold_csv, save_prf_csv, save_stimulus

logger = get_logger(__name__)

CASE_FILES = (
    MESH_FILE,
    UV_FILE,
    PRF_FILE,
    STIMULUS_FILE,
    BOLD_FILE,
    BOLD_NOISELESS_FILE,
    DEFORMATION_FILE,
)
ANGLE_TRANSFORMS = {
    AngleConvention.MATH_CCW: "identity",
    AngleConvention.CW_FROM_UPPER_VERTICAL: "theta = 90 - angle",
}


def open_case(root: Path) -> CaseDirectory:
    return CaseDirectory(root=Path(root))


def build_manifest(
    case: CaseDirectory,
    hemisphere: Optional[str] = None,
    prf_tool: str = PrfTool.SYNTHETIC.value,
    angle_transform: str = "identity",
    seed: Optional[int] = None,
    role: str = "subject",
) -> CaseManifest:
    """Manifest listing the SHA-256 of every conventional file present in the case."""
    files = {
        name: compute_file_hash(case.root / name)
        for name in CASE_FILES
        if (case.root / name).is_file()
    }
    return CaseManifest(
        files=files,
        hemisphere=hemisphere,
        prf_tool=prf_tool,
        angle_transform=angle_transform,
        seed=seed,
        role=role,
    )


def write_manifest(case: CaseDirectory, manifest: CaseManifest) -> Path:
    """Write ``manifest.json`` with sorted keys."""
    case.root.mkdir(parents=True, exist_ok=True)
    case.manifest.write_text(json.dumps(manifest.to_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8")
    return case.manifest


def refresh_manifest(case: CaseDirectory, **fields) -> CaseManifest:
    """Rebuild the checksum list, keeping the recorded metadata unless overridden."""
    current = load_manifest(case) if case.manifest.is_file() else CaseManifest()
    metadata = current.model_dump(exclude={"files"})
    metadata.update(fields)
    manifest = build_manifest(case, **metadata)
    write_manifest(case, manifest)
    return manifest


def load_manifest(case: CaseDirectory) -> CaseManifest:
    """
    Read ``manifest.json``.

    Raises:
        MissingCaseFile: If the manifest is absent
        FormatError: If it is not valid manifest JSON
    """
    if not case.manifest.is_file():
        raise MissingCaseFile(f"{case.manifest}: manifest not found")
    try:
        return CaseManifest(**json.loads(case.manifest.read_text(encoding="utf-8")))
    except (json.JSONDecodeError, TypeError, ValidationError) as e:
        raise FormatError(f"{case.manifest}: invalid manifest ({e})") from e


def verified_path(case: CaseDirectory, name: str, manifest: Optional[CaseManifest] = None) -> Path:
    """
    Path of a case file after checking presence and checksum.

    Raises:
        MissingCaseFile: If the file is absent
        ChecksumMismatch: If the file is unlisted or its digest differs from the manifest
    """
    manifest = manifest or load_manifest(case)
    path = case.root / name
    if not path.is_file():
        raise MissingCaseFile(f"{path}: file not found")
    expected = manifest.files.get(name)
    if expected is None:
        raise ChecksumMismatch(f"{path}: not listed in {MANIFEST_FILE}")
    if not verify_file_hash(path, expected):
        raise ChecksumMismatch(f"{path}: SHA-256 does not match {MANIFEST_FILE}")
    return path


def has_file(case: CaseDirectory, name: str) -> bool:
    return (case.root / name).is_file()


def parameterization_from_uv(mesh: CorticalMesh, uv: np.ndarray, source: str = "<uv>") -> DiskParameterization:
    """Wrap loaded disk coordinates with the mesh's boundary loop."""
    if len(uv) != mesh.vertex_count:
        raise FormatError(f"{source}: {len(uv)} coordinates for a mesh of {mesh.vertex_count} vertices")
    try:
        return DiskParameterization(uv=uv, boundary_ids=boundary_loop(mesh.faces))
    except ValidationError as e:
        raise FormatError(f"{source}: {e.errors()[0]['msg']}") from e


def load_case_geometry(case: CaseDirectory) -> Tuple[CorticalMesh, Optional[DiskParameterization], CaseManifest]:
    """Mesh, disk parameterization (None when the case has no uv file) and manifest."""
    manifest = load_manifest(case)
    mesh = load_mesh(verified_path(case, MESH_FILE, manifest))
    param = None
    if has_file(case, UV_FILE):
        uv_path = verified_path(case, UV_FILE, manifest)
        param = parameterization_from_uv(mesh, load_uv(uv_path), str(uv_path))
    return mesh, param, manifest


def _hemisphere(label: Optional[str], source: str) -> Optional[Hemisphere]:
    if not label:
        return None
    try:
        return Hemisphere(label)
    except ValueError as e:
        raise FormatError(f"{source}: unknown hemisphere '{label}'") from e


def build_case_map(
    case: CaseDirectory,
    mesh: CorticalMesh,
    param: DiskParameterization,
    manifest: Optional[CaseManifest] = None,
) -> RetinotopicMap:
    """
    Assemble the retinotopic map of a case from its pRF CSV.

    Raises:
        MissingCaseFile, ChecksumMismatch, FormatError
    """
    manifest = manifest or load_manifest(case)
    prf_path = verified_path(case, PRF_FILE, manifest)
    prf = load_prf_csv(prf_path, mesh.vertex_count)
    try:
        tool = PrfTool(prf.prf_tool)
    except ValueError as e:
        raise FormatError(f"{prf_path}: unknown prf_tool '{prf.prf_tool}'") from e
    declared = ANGLE_TRANSFORMS[prf.angle_convention]
    if manifest.angle_transform != declared:
        logger.warning(
            "angle_transform_mismatch",
            manifest=manifest.angle_transform,
            csv_convention=prf.angle_convention.value,
            applied=declared,
        )
    try:
        return RetinotopicMap(
            mesh=mesh,
            param=param,
            visual=prf.visual,
            prf_size=prf.prf_size,
            variance_explained=prf.variance_explained,
            hemisphere=_hemisphere(manifest.hemisphere, str(case.manifest)),
            prf_tool=tool,
        )
    except ValidationError as e:
        raise FormatError(f"{prf_path}: {e.errors()[0]['msg']}") from e


def load_case_map(case: CaseDirectory) -> RetinotopicMap:
    """
    Load a case whose uv file is present.

    Raises:
        MissingCaseFile: If the uv file (or any other required file) is absent
    """
    mesh, param, manifest = load_case_geometry(case)
    if param is None:
        raise MissingCaseFile(f"{case.uv}: file not found (run flatten first)")
    return build_case_map(case, mesh, param, manifest)


def load_case_stimulus(case: CaseDirectory) -> Stimulus:
    return load_stimulus(verified_path(case, STIMULUS_FILE))


def load_case_bold(case: CaseDirectory, tr: Optional[float] = None) -> BoldSeries:
    return load_bold_csv(verified_path(case, BOLD_FILE), tr)


def save_case_map(
    case: CaseDirectory,
    retinotopic_map: RetinotopicMap,
    role: str,
    seed: Optional[int] = None,
) -> CaseManifest:
    """Write mesh, uv and pRF files of a map and refresh the manifest."""
    save_mesh(retinotopic_map.mesh, case.mesh)
    save_uv(retinotopic_map.param.uv, case.uv)
    save_prf_csv(
        case.prf,
        retinotopic_map.visual,
        retinotopic_map.prf_size,
        retinotopic_map.variance_explained,
        retinotopic_map.prf_tool.value,
    )
    return refresh_manifest(
        case,
        hemisphere=retinotopic_map.hemisphere.value if retinotopic_map.hemisphere else None,
        prf_tool=retinotopic_map.prf_tool.value,
        angle_transform=ANGLE_TRANSFORMS[AngleConvention.MATH_CCW],
        seed=seed,
        role=role,
    )


def write_synthetic_case(synthetic: SyntheticCase, subject_dir: Path, template_dir: Path) -> Tuple[Path, Path]:
    """
    Write a synthetic experiment as a subject and a template case directory.

    The subject directory also carries the stimulus, noisy and noiseless
    BOLD series and the ground-truth deformation g(uv).
    """
    subject_case = open_case(subject_dir)
    template_case = open_case(template_dir)
    seed = synthetic.spec.seed

    save_case_map(template_case, synthetic.template, role="template", seed=seed)

    save_stimulus(synthetic.stimulus, subject_case.stimulus)
    save_bold_csv(synthetic.bold, subject_case.bold)
    save_bold_csv(synthetic.bold_noiseless, subject_case.bold_noiseless)
    save_uv(synthetic.deformation.ground_truth, subject_case.deformation)
    save_case_map(subject_case, synthetic.subject, role="subject", seed=seed)

    logger.info("synthetic_case_written", subject=str(subject_case.root), template=str(template_case.root))
    return subject_case.root, template_case.root
