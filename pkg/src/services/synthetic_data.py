"""Ground-truth-known synthetic templates, deformations, subjects, stimuli and BOLD series."""

from typing import Optional, Tuple

import numpy as np

from ..lib.config import (
    DEFORMATION_MAX_ORDER,
    DEFORMATION_PRESCRIBED_LIMIT,
    DEFORMATION_RESCALE_ATTEMPTS,
    DEFORMATION_TARGET_FRACTION,
)
from ..lib.errors import ConformalSingularity, DegenerateSourceFace, SolverFailure
from ..lib.logging import get_logger
from ..models.beltrami_field import BeltramiField
from ..models.cortical_mesh import CorticalMesh
from ..models.disk_parameterization import DiskParameterization
from ..models.prf import BoldSeries, HRFParams, Stimulus
from ..models.retinotopic_map import PrfTool, RetinotopicMap
from ..models.synthetic_spec import Deformation, R2Profile, SyntheticCase, SyntheticSpec
from .beltrami import beltrami_stiffness, compute_beltrami, face_triangles, solve_with_pins
from .mesh_topology import boundary_loop, count_flipped
from .prf_model import canonical_hrf, predict_bold_batch
from .template_interpolation import interpolate_template

logger = get_logger(__name__)

# Independent random streams derived from one seed
_STREAM_DEFORMATION = 1
_STREAM_VISUAL_NOISE = 2
_STREAM_BOLD_NOISE = 3


def _rng(seed: int, stream: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence([seed, stream]))


def ring_count(resolution: int) -> int:
    """Smallest ring count K whose hexagonal disk has at least ``resolution`` vertices (1 + 3K(K+1))."""
    rings = 1
    while 1 + 3 * rings * (rings + 1) < resolution:
        rings += 1
    return rings


def disk_mesh(resolution: int, radius: float = 1.0) -> CorticalMesh:
    """
    Planar hexagonal disk mesh in the z = 0 plane.

    Ring k of K carries 6k vertices at radius k/K; each ring is stitched to
    the previous one sextant by sextant, giving 6K^2 counter-clockwise faces.

    Args:
        resolution: Target vertex count
        radius: Disk radius (mm)
    """
    rings = ring_count(resolution)
    points = [np.zeros(2)]
    starts = [0]
    for k in range(1, rings + 1):
        starts.append(len(points))
        angles = 2.0 * np.pi * np.arange(6 * k) / (6 * k)
        ring = (k / rings) * np.column_stack([np.cos(angles), np.sin(angles)])
        points.extend(ring)

    faces = []
    for k in range(1, rings + 1):
        outer = lambda j: starts[k] + j % (6 * k)
        inner = (lambda j: 0) if k == 1 else (lambda j: starts[k - 1] + j % (6 * (k - 1)))
        for sextant in range(6):
            for j in range(k):
                faces.append((inner(sextant * (k - 1) + j), outer(sextant * k + j), outer(sextant * k + j + 1)))
            for j in range(1, k):
                faces.append((inner(sextant * (k - 1) + j - 1), outer(sextant * k + j), inner(sextant * (k - 1) + j)))

    xy = radius * np.asarray(points)
    faces = np.asarray(faces, dtype=np.int64)
    e1 = xy[faces[:, 1]] - xy[faces[:, 0]]
    e2 = xy[faces[:, 2]] - xy[faces[:, 0]]
    clockwise = (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]) < 0
    faces[clockwise] = faces[clockwise][:, [0, 2, 1]]
    return CorticalMesh(vertices=np.column_stack([xy, np.zeros(len(xy))]), faces=faces)


def disk_parameterization(mesh: CorticalMesh, radius: float) -> DiskParameterization:
    """Parameterization of a planar disk mesh: uv = xy / radius."""
    uv = np.asarray(mesh.vertices)[:, :2] / radius
    loop = boundary_loop(mesh.faces)
    uv[loop] /= np.linalg.norm(uv[loop], axis=1)[:, None]
    return DiskParameterization(uv=uv, boundary_ids=loop)


def template_polar_angle(phi: np.ndarray, wedge_deg: float, bands: int) -> np.ndarray:
    """
    Polar angle (degrees) of the schematic template at disk angle ``phi`` (radians).

    One band maps the disk angle linearly onto a wedge centred on 0; three
    bands run the wedge forward, backward and forward again so the map
    mirrors at band boundaries.
    """
    if bands == 1:
        return np.degrees(phi) * wedge_deg / 360.0
    position = bands * (phi + np.pi) / (2.0 * np.pi)
    band = np.minimum(np.floor(position), bands - 1)
    fraction = position - band
    sweep = np.where(band % 2 == 0, fraction, 1.0 - fraction)
    return -wedge_deg / 2.0 + sweep * wedge_deg


def synth_template(spec: SyntheticSpec) -> RetinotopicMap:
    """
    Analytic log-polar template on a regular disk mesh.

    Disk radius r maps to eccentricity ecc_min (ecc_max / ecc_min)^r, disk
    angle to polar angle over the configured wedge; sigma grows linearly with
    eccentricity and R^2 is 1 everywhere.
    """
    mesh = disk_mesh(spec.mesh_resolution, spec.patch_radius_mm)
    param = disk_parameterization(mesh, spec.patch_radius_mm)
    uv = np.asarray(param.uv)

    ecc_min, ecc_max = spec.ecc_range
    r = np.clip(np.linalg.norm(uv, axis=1), 0.0, 1.0)
    ecc = ecc_min * (ecc_max / ecc_min) ** r
    theta = np.radians(template_polar_angle(np.arctan2(uv[:, 1], uv[:, 0]), spec.wedge_deg, spec.bands))
    visual = np.column_stack([ecc * np.cos(theta), ecc * np.sin(theta)])

    template = RetinotopicMap(
        mesh=mesh,
        param=param,
        visual=visual,
        prf_size=spec.sigma_intercept + spec.sigma_slope * ecc,
        variance_explained=np.ones(mesh.vertex_count),
        hemisphere=spec.hemisphere,
        prf_tool=PrfTool.SYNTHETIC,
    )
    logger.info("synthetic_template_built", vertices=mesh.vertex_count, faces=mesh.face_count, bands=spec.bands)
    return template


def random_beltrami_field(points: np.ndarray, mu_max: float, seed: int) -> np.ndarray:
    """
    Smooth complex field sum_{j+k<=3} c_jk z^j conj(z)^k with Gaussian c_jk, scaled to max |mu| = mu_max.
    """
    rng = _rng(seed, _STREAM_DEFORMATION)
    z = points[:, 0] + 1j * points[:, 1]
    mu = np.zeros(len(z), dtype=complex)
    for j in range(DEFORMATION_MAX_ORDER + 1):
        for k in range(DEFORMATION_MAX_ORDER + 1 - j):
            coefficient = rng.normal() + 1j * rng.normal()
            mu += coefficient * z ** j * np.conj(z) ** k
    peak = np.max(np.abs(mu))
    return mu * (mu_max / peak) if peak > 0 else mu


def synth_deformation(
    faces: np.ndarray,
    param: DiskParameterization,
    mu_max: float,
    seed: int,
) -> Deformation:
    """
    Random quasiconformal self-map of the disk with a prescribed coefficient bound.

    The field is reconstructed with the boundary fixed at the identity. The
    realised map's max |mu| rarely equals the prescribed peak, so the field is
    rescaled in proportion and solved again until the realised max lies in
    [DEFORMATION_TARGET_FRACTION * mu_max, mu_max]. A flipped or singular
    reconstruction halves the field.

    Args:
        faces: (nf, 3) mesh faces
        param: Disk parameterization (source)
        mu_max: Largest allowed |mu|, 0 <= mu_max < 1
        seed: Random seed

    Returns:
        Deformation with the deformed parameterization and ground-truth positions;
        the strongest admissible attempt when none reaches the target band

    Raises:
        ValueError: If mu_max is outside [0, 1)
        SolverFailure: If no attempt stays within the bound, or a reconstruction does not converge
    """
    if not 0.0 <= mu_max < 1.0:
        raise ValueError("mu_max must lie in [0, 1)")
    faces = np.asarray(faces)
    uv = np.asarray(param.uv)
    boundary = np.asarray(param.boundary_ids)
    if mu_max == 0.0:
        return Deformation(deformed=param, ground_truth=uv, mu=BeltramiField(mu=np.zeros(len(faces))))

    source_tri = face_triangles(uv, faces)
    mu = random_beltrami_field(source_tri.mean(axis=1), mu_max, seed)
    best: Optional[Tuple[np.ndarray, BeltramiField]] = None
    for attempt in range(1, DEFORMATION_RESCALE_ATTEMPTS + 1):
        stiffness = beltrami_stiffness(faces, source_tri, mu, len(uv))
        target = solve_with_pins(stiffness, boundary, uv[boundary], stage="synth")
        actual = None
        if not count_flipped(target, faces):
            try:
                actual = compute_beltrami(faces, uv, target)
            except (ConformalSingularity, DegenerateSourceFace):
                actual = None

        if actual is not None and actual.max_abs <= mu_max + 1e-12:
            if best is None or actual.max_abs > best[1].max_abs:
                best = (target, actual)
            if actual.max_abs >= DEFORMATION_TARGET_FRACTION * mu_max:
                break

        if actual is None or actual.max_abs == 0.0:
            scale = 0.5
        else:
            scale = (1.0 + DEFORMATION_TARGET_FRACTION) / 2.0 * mu_max / actual.max_abs
        peak = float(np.max(np.abs(mu)))
        scale = min(scale, DEFORMATION_PRESCRIBED_LIMIT / peak)
        if np.isclose(scale, 1.0):
            break
        mu = mu * scale
        logger.debug(
            "synthetic_deformation_rescaled",
            attempt=attempt,
            realised=actual.max_abs if actual is not None else None,
            scale=scale,
        )

    if best is None:
        raise SolverFailure(
            f"could not bound the deformation by mu_max={mu_max} in {DEFORMATION_RESCALE_ATTEMPTS} attempts",
            stage="synth",
        )
    target, actual = best
    logger.info("synthetic_deformation_built", mu_max=actual.max_abs, bound=mu_max, attempts=attempt)
    return Deformation(
        deformed=DiskParameterization(uv=target, boundary_ids=boundary),
        ground_truth=target,
        mu=actual,
    )


def deformed_template_values(template: RetinotopicMap, deformation: Deformation) -> Tuple[np.ndarray, np.ndarray]:
    """Noise-free subject visual coordinates and pRF sizes: template values at g(uv_i)."""
    sample = interpolate_template(template, deformation.ground_truth)
    valid = np.asarray(sample.valid)
    visual = np.where(valid[:, None], sample.visual, template.visual)
    prf_size = np.where(valid, sample.prf_size, template.prf_size)
    return visual, prf_size


def synth_subject(
    template: RetinotopicMap,
    deformation: Deformation,
    visual_noise_sd: float,
    r2_profile: Optional[R2Profile] = None,
    seed: int = 0,
) -> RetinotopicMap:
    """
    Subject map: the template composed with the deformation plus isotropic visual noise.

    Args:
        template: Template map
        deformation: Ground-truth deformation from ``synth_deformation``
        visual_noise_sd: Noise SD, degrees
        r2_profile: Variance-explained profile over (true) eccentricity
        seed: Random seed
    """
    r2_profile = r2_profile or R2Profile()
    truth, prf_size = deformed_template_values(template, deformation)
    noise = _rng(seed, _STREAM_VISUAL_NOISE).normal(0.0, 1.0, size=truth.shape) * visual_noise_sd
    eccentricity = np.hypot(truth[:, 0], truth[:, 1])
    return RetinotopicMap(
        mesh=template.mesh,
        param=template.param,
        visual=truth + noise,
        prf_size=prf_size,
        variance_explained=r2_profile.base * np.exp(-r2_profile.decay * eccentricity),
        hemisphere=template.hemisphere,
        prf_tool=PrfTool.SYNTHETIC,
    )


def synth_bar_stimulus(
    n_sweeps: int,
    frames_per_sweep: int,
    extent: float,
    resolution: int,
    tr: float,
) -> Stimulus:
    """
    Bar apertures of width extent/8 sweeping the field.

    Sweep k moves perpendicular to orientation k * 180 / n_sweeps degrees,
    first forward then in reverse, so there are n_sweeps * 2 * frames_per_sweep frames.
    """
    if n_sweeps < 1 or frames_per_sweep < 1 or resolution < 2:
        raise ValueError("sweep counts and resolution must be positive (resolution >= 2)")
    half = extent / 2.0
    grid_x, grid_y = np.meshgrid(np.linspace(-half, half, resolution), np.linspace(half, -half, resolution))
    half_width = extent / 16.0

    frames = []
    for sweep in range(n_sweeps):
        angle = np.pi * sweep / n_sweeps
        projection = grid_x * np.cos(angle) + grid_y * np.sin(angle)
        reach = float(np.max(np.abs(projection)))
        centres = np.linspace(-reach, reach, frames_per_sweep)
        for centre in np.concatenate([centres, centres[::-1]]):
            frames.append((np.abs(projection - centre) <= half_width + 1e-12).astype(np.uint8))
    return Stimulus(frames=np.stack(frames), field_extent=extent, tr=tr)


def synth_bold(
    stimulus: Stimulus,
    visual: np.ndarray,
    prf_size: np.ndarray,
    snr: float,
    seed: int,
    hrf: Optional[HRFParams] = None,
) -> Tuple[BoldSeries, BoldSeries]:
    """
    Noiseless and noisy BOLD series for per-vertex pRFs.

    White Gaussian noise is scaled per vertex so that signal SD / noise SD = snr.

    Returns:
        Tuple of (noisy, noiseless) series
    """
    clean = predict_bold_batch(stimulus, visual, prf_size, canonical_hrf(hrf, stimulus.tr))
    noise_sd = clean.std(axis=1, keepdims=True) / snr
    noisy = clean + _rng(seed, _STREAM_BOLD_NOISE).normal(0.0, 1.0, size=clean.shape) * noise_sd
    return BoldSeries(samples=noisy, tr=stimulus.tr), BoldSeries(samples=clean, tr=stimulus.tr)


def build_synthetic_case(spec: SyntheticSpec) -> SyntheticCase:
    """Generate a complete synthetic experiment from one spec; a pure function of (spec, seed)."""
    template = synth_template(spec)
    deformation = synth_deformation(template.faces, template.param, spec.deformation_mu_max, spec.seed)
    subject = synth_subject(template, deformation, spec.visual_noise_sd, spec.r2_profile, spec.seed)
    truth_visual, truth_prf_size = deformed_template_values(template, deformation)
    stimulus = synth_bar_stimulus(
        spec.n_sweeps, spec.frames_per_sweep, spec.stimulus_extent, spec.stimulus_resolution, spec.tr
    )
    bold, bold_noiseless = synth_bold(stimulus, truth_visual, truth_prf_size, spec.bold_snr, spec.seed)
    logger.info(
        "synthetic_case_built",
        vertices=template.vertex_count,
        mu_max=deformation.mu.max_abs,
        noise_sd=spec.visual_noise_sd,
        frames=stimulus.frame_count,
        seed=spec.seed,
    )
    return SyntheticCase(
        spec=spec,
        template=template,
        subject=subject,
        deformation=deformation,
        truth_visual=truth_visual,
        truth_prf_size=truth_prf_size,
        stimulus=stimulus,
        bold=bold,
        bold_noiseless=bold_noiseless,
    )
